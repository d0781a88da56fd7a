#!/usr/bin/env python3
"""Writes the fixture pool, corpus and per-unit raw model outputs.

Run from this directory; then run make_replay.py to rebuild replay.jsonl.
"""
import json

DL, LP, SW, OT = "DatasetDirectLink", "DatasetLandingPage", "Software", "Other"


def record(rid, repo, parts):
    """parts: plain strings and (url, label) tuples, concatenated in order."""
    context, mentions = "", []
    for p in parts:
        if isinstance(p, tuple):
            url, label = p
            mentions.append({"url": url, "start": len(context), "end": len(context) + len(url), "label": label})
            context += url
        else:
            context += p
    return {"id": rid, "repo": repo, "context": context, "mentions": mentions}


POOL = [
    record("pool-gowalla", "pool/gowalla", [
        "Gowalla ", ("https://snap.stanford.edu/data/loc-gowalla.html", LP),
        " : the pre-processed data that we used in the paper can be downloaded here ",
        ("http://dawenl.github.io/data/gowalla_pro.zip", DL), " ."]),
    record("pool-software", "pool/sklearn-demo", [
        "This project depends on scikit-learn ", ("https://github.com/scikit-learn/scikit-learn", SW),
        " for the classifiers."]),
    record("pool-other", "pool/citation", [
        "Please cite our paper ", ("https://arxiv.org/abs/1905.00001", OT), " if you use this code."]),
    record("pool-mixed", "pool/yelp-nlp", [
        "The Yelp reviews are described at ", ("https://www.yelp.com/dataset", LP),
        " and we preprocess them with spaCy ", ("https://spacy.io/", SW), " ."]),
    record("pool-imagenet", "pool/imagenet-val", [
        "ImageNet validation images: ",
        ("http://www.image-net.org/challenges/LSVRC/2012/nnoupb/ILSVRC2012_img_val.tar", DL)]),
    record("pool-kaggle", "pool/titanic", [
        "Competition data is on Kaggle ", ("https://www.kaggle.com/c/titanic/data", LP), " ."]),
    record("pool-docker", "pool/app-image", [
        "A ready-made image is published at ", ("https://hub.docker.com/r/pool/app", SW), " ."]),
    record("pool-license", "pool/licensed", [
        "Released under the Apache License ", ("https://www.apache.org/licenses/LICENSE-2.0", OT), " ."]),
    record("pool-wiki", "pool/wiki-dump", [
        "We use the English Wikipedia dump ",
        ("https://dumps.wikimedia.org/enwiki/latest/enwiki-latest-pages-articles.xml.bz2", DL), " ."]),
    record("pool-tensorflow", "pool/tf-models", [
        "Models are trained with TensorFlow ", ("https://www.tensorflow.org/", SW), " ."]),
    record("pool-nyc", "pool/taxi", [
        "Taxi trip records are published by the NYC TLC ",
        ("https://www1.nyc.gov/site/tlc/about/tlc-trip-record-data.page", LP), " ."]),
    record("pool-twitter", "pool/social", [
        "Follow us on Twitter ", ("https://twitter.com/pooldev", OT), " for updates."]),
]

CORPUS = [
    record("c01", "acme/movielens-rec", [
        "We evaluate on MovieLens 1M ", ("https://grouplens.org/datasets/movielens/1m/", LP),
        " and the raw ratings file ", ("http://files.grouplens.org/datasets/movielens/ml-1m.zip", DL), " ."]),
    record("c02", "kdd/graphsage-lite", [
        "The implementation builds on PyTorch Geometric ",
        ("https://github.com/pyg-team/pytorch_geometric", SW), " ."]),
    record("c03", "vision/cifar-tools", [
        "Download CIFAR-10 from ", ("https://www.cs.toronto.edu/~kriz/cifar-10-python.tar.gz", DL),
        " and place it under data/."]),
    record("c04", "nlp/squad-baseline", [
        "The SQuAD v1.1 dataset is described at ", ("https://rajpurkar.github.io/SQuAD-explorer/", LP),
        " ; our code is licensed under ", ("https://opensource.org/licenses/MIT", OT), " ."]),
    record("c05", "geo/osm-tiles", [
        "Map tiles are rendered from OpenStreetMap ", ("https://www.openstreetmap.org", LP),
        " using Mapnik ", ("https://mapnik.org/", SW), " ."]),
    record("c06", "bio/protein-fold", [
        "Pretrained weights can be fetched with wget ",
        ("https://zenodo.org/record/123456/files/weights.tar.gz", DL),
        " , and the PDB entries come from ", ("https://www.rcsb.org/", LP), " ."]),
    record("c07", "audio/speech-kit", [
        "See the documentation at ", ("https://speechkit.readthedocs.io/en/latest/", OT),
        " for installation details."]),
    record("c08", "rl/gym-maze", [
        "Environments follow the OpenAI Gym interface ", ("https://github.com/openai/gym", SW),
        " ; a demo video is on ", ("https://www.youtube.com/watch?v=abc123", OT), " ."]),
    record("c09", "cv/coco-detect", [
        "Annotations are taken from COCO 2017 ",
        ("http://images.cocodataset.org/annotations/annotations_trainval2017.zip", DL),
        " (see ", ("https://cocodataset.org/#download", LP), " )."]),
    record("c10", "ml/tabular-bench", [
        "Benchmarks use the UCI Adult data ", ("https://archive.ics.uci.edu/ml/datasets/adult", LP), " ."]),
    record("c11", "nlp/glue-runner", [
        "We rely on HuggingFace Transformers ", ("https://github.com/huggingface/transformers", SW),
        " and the GLUE benchmark ", ("https://gluebenchmark.com/", LP), " ."]),
    record("c12", "sys/log-parser", [
        "Raw logs: ", ("https://zenodo.org/record/3227177/files/HDFS_1.tar.gz?download=1", DL), " ."]),
    record("c13", "web/crawler", [
        "Built with Scrapy ", ("https://scrapy.org/", SW), " . Questions? Open an issue at ",
        ("https://github.com/web/crawler/issues", OT), " ."]),
    record("c14", "med/mimic-notes", [
        "Access to MIMIC-III requires credentialing via ",
        ("https://physionet.org/content/mimiciii/1.4/", LP), " ."]),
    record("c15", "graph/ogb-runner", [
        "Datasets are downloaded automatically from ",
        ("https://snap.stanford.edu/ogb/data/nodeproppred/arxiv.zip", DL),
        " by the OGB loader ", ("https://github.com/snap-stanford/ogb", SW), " ."]),
    record("c16", "hci/survey-data", [
        "The survey responses are archived on OSF ", ("https://osf.io/x7k2p/", LP),
        " and analysed in R ", ("https://www.r-project.org/", SW), " ."]),
    record("c17", "climate/era5-tools", [
        "ERA5 reanalysis data is available from the Copernicus Climate Data Store ",
        ("https://cds.climate.copernicus.eu/", LP), " ."]),
    record("c18", "sec/malware-feed", [
        "Samples were drawn from ", ("https://bazaar.abuse.ch/export/csv/full/", DL),
        " , and the paper is at ", ("https://arxiv.org/abs/2101.00001", OT), " ."]),
    record("c19", "edu/mooc-analytics", [
        "Course logs come from the HarvardX-MITx Person-Course dataset ",
        ("https://dataverse.harvard.edu/dataset.xhtml?persistentId=doi:10.7910/DVN/26147", LP), " ."]),
    record("c20", "ir/msmarco-eval", [
        "Evaluation scripts ", ("https://github.com/microsoft/MSMARCO-Passage-Ranking", SW),
        " and the collection ",
        ("https://msmarco.blob.core.windows.net/msmarcoranking/collection.tar.gz", DL), " ."]),
]

SNAKE = {DL: "dataset_direct_link", LP: "dataset_landing_page", SW: "software", OT: "other"}


def arr(pairs, sep=", ", obj_sep=","):
    return "[" + obj_sep.join('{"URL": %s%s"label": %s}' % (json.dumps(u), sep, json.dumps(l)) for u, l in pairs) + "]"


def gold_pairs(rid):
    rec = next(r for r in CORPUS if r["id"] == rid)
    return [(m["url"], SNAKE[m["label"]]) for m in rec["mentions"]]


g = gold_pairs
ECL_RAW = {
    "c01": arr(g("c01")),
    "c02": "Sure! Here is the annotation:\n" + arr(g("c02")),
    "c03": arr([(g("c03")[0][0], "dataset_landing_page")]),
    "c04": "```json\n" + arr(g("c04")) + "\n```",
    "c05": "\n".join('{"URL": %s, "label": %s}' % (json.dumps(u), json.dumps(l)) for u, l in g("c05")),
    "c06": arr(g("c06"))[: len(arr(g("c06")[:1])) + 20],
    "c07": "Sure! I'm ready to annotate the URLs in the input. Please provide the input text.",
    "c08": arr(g("c08") + [("https://gym.openai.com/envs/", "software")]),
    "c09": arr([("http://images.cocodataset.org/annotations/", "dataset_direct_link"), g("c09")[1]]),
    "c10": '[{"link": "https://archive.ics.uci.edu/ml/datasets/adult", "class": "Dataset Landing Page"}]',
    "c11": '[{"URL": "https://github.com/huggingface/transformers", "label": "software",},'
           ' {"URL": "https://gluebenchmark.com/", "label": "dataset_landing_page",},]',
    "c12": "Output: " + arr(g("c12")) + "\nI hope this helps!",
    "c13": arr([g("c13")[0], (g("c13")[1][0], "issue_tracker")]),
    "c14": "[]",
    "c15": '{"URL": %s, "label": "dataset_direct_link"}' % json.dumps(g("c15")[0][0]),
    "c16": arr([(u, l.upper()) for u, l in g("c16")]),
    "c17": "The URL refers to a dataset landing page.",
    "c18": '[{"URL": "https://bazaar.abuse.ch/export/csv/full/", "label": ',
    "c19": '[{"label": "dataset_landing_page"}]',
    "c20": "Here are the URLs I found:\n" + arr(g("c20"), sep=",", obj_sep=",")
           + "\nNote: both URLs appear in the input.",
}

# Classify-only outputs: right label except where noted.
CL_WRONG = {"c03#0": "dataset_landing_page", "c08#1": "software", "c18#0": "other"}
CL_RAW = {}
for r in CORPUS:
    for i, m in enumerate(r["mentions"]):
        uid = f"{r['id']}#{i}"
        CL_RAW[uid] = arr([(m["url"], CL_WRONG.get(uid, SNAKE[m["label"]]))])
CL_RAW["c07#0"] = "Sure! I'm ready to annotate the URLs in the input. Please provide the input text."


def jsonl(path, rows):
    with open(path, "w") as f:
        for r in rows:
            f.write(json.dumps(r, ensure_ascii=False) + "\n")


if __name__ == "__main__":
    jsonl("pool.jsonl", POOL)
    jsonl("corpus.jsonl", CORPUS)
    with open("raw_outputs.json", "w") as f:
        json.dump({"e+cl": ECL_RAW, "cl": CL_RAW}, f, indent=1, sort_keys=True)
        f.write("\n")
