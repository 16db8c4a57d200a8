"""Toolkit for building paired cross-cultural recipe corpora and evaluating adaptations.

Subpackages and modules:

- ``corpus``      cleaning, serialization, token counting, corpus statistics
- ``embeddings``  skip-gram negative-sampling word vectors and vector queries
- ``alignment``   orthogonal mapping between embedding spaces, lexicon induction
- ``matching``    title-based recipe pairing and train/val splitting
- ``metrics``     BLEU / ChrF / ROUGE-L surface metrics, PENMAN graphs, Smatch
- ``analysis``    Kendall meta-evaluation and literal-translation-rate reports
- ``adapters``    prompt-based and retrieval adaptation baselines
- ``annotation``  task store and HTTP service for human writing/rating
- ``pipeline``    end-to-end orchestration with content-addressed run manifests
"""

__version__ = "0.1.0"
