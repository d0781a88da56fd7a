pub mod cli;
pub mod corpus;
pub mod evaluator;
pub mod harvester;
pub mod http;
pub mod llm_client;
pub mod matcher;
pub mod output_parser;
mod pool;
pub mod prompting;
