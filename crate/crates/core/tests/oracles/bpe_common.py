"""Shared byte-level helpers for the reference-tokenizer scripts.

These scripts are independent of the Rust tokenizer: pre-tokenization runs on
the Python `regex` engine and encoding applies merges in rank order over the
whole word rather than the lowest-rank-pair loop used by the crate.
"""
import regex

GPT2_PATTERN = regex.compile(
    r"""'s|'t|'re|'ve|'m|'ll|'d| ?\p{L}+| ?\p{N}+| ?[^\s\p{L}\p{N}]+|\s+(?!\S)|\s+"""
)


def bytes_to_unicode():
    bs = (
        list(range(ord("!"), ord("~") + 1))
        + list(range(ord("¡"), ord("¬") + 1))
        + list(range(ord("®"), ord("ÿ") + 1))
    )
    cs = bs[:]
    n = 0
    for b in range(256):
        if b not in bs:
            bs.append(b)
            cs.append(256 + n)
            n += 1
    return {b: chr(c) for b, c in zip(bs, cs)}


BYTE_ENCODER = bytes_to_unicode()


def pretokenize(text):
    return [
        "".join(BYTE_ENCODER[b] for b in piece.encode("utf-8"))
        for piece in GPT2_PATTERN.findall(text)
    ]
