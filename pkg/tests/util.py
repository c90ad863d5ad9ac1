"""Package-side construction helpers shared across test modules."""

from vocadapt import Corpus, Document, Vocabulary


def corpus_from_freqs(freqs, name="synthetic"):
    """A one-document corpus whose summary word counts equal ``freqs``."""
    text = " ".join(word for word, count in freqs.items() for _ in range(count))
    return Corpus([Document(id="d1", source="src", summary=text)], name=name)


def wordpiece_vocab(tokens, cont="##"):
    return Vocabulary(tokens=tuple(tokens), family="wordpiece", continuation_marker=cont)


def bare_vocab(tokens):
    return Vocabulary(tokens=tuple(tokens), family="wordpiece", continuation_marker="")
