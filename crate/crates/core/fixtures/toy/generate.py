"""Builds the toy evaluation corpus and its mock fixtures.

Each segment has a clean English reference. Four systems translate it with
0, 2, 4 or 6 words replaced, so fewer replacements means a better
translation, and the human judgments follow that order.

The mock grades a translation by trigram overlap against a reference. The
combining prompts see the clean reference; the perplexity, token and
sentence prompts each see a different system's output instead, so their
grades are close to noise. The script also simulates the mock to write the
expected Kendall counts for every estimator (expected_tau.json).

Run from this directory: python3 generate.py
"""

import json
import random

LPS = ["de-en", "ru-en", "zh-en"]
SYSTEMS = ["sysA", "sysB", "sysC", "sysD"]
SEGMENTS = 20
JUDGMENTS = 50
EDITS = [0, 2, 4, 6]

WORDS = (
    "the a committee council minister river market city village report plan "
    "budget school teacher doctor train station morning evening summer winter "
    "agreed rejected announced delayed opened closed visited described "
    "quickly slowly yesterday today tomorrow finally again new old large small "
    "public local national early late after before during under over"
).split()
NOISE = (
    "zebra quartz fjord glyph nymph crwth jinx vex whizz bulb mystic "
    "pyx oxbow klutz squib frowzy jumpy waltz"
).split()
SOURCE_ALPHABET = {
    "de-en": "der die das und ist nicht mit auf fuer von bei nach".split(),
    "ru-en": "и в не на что он с как это по но из".split(),
    "zh-en": list("的一是不了人我在有他这中大来上国个到说们为子和你地出道也时年"),
}


def trigrams(s):
    s = s.lower()
    if not s:
        return set()
    if len(s) < 3:
        return {s}
    return {s[i : i + 3] for i in range(len(s) - 2)}


def mock_class(mt, ref, k=5):
    a, b = trigrams(mt), trigrams(ref)
    denom = min(len(a), len(b))
    if denom == 0:
        return 0
    return min(len(a & b) * k // denom, k - 1)


def degrade(words, edits, rng):
    out = list(words)
    for i in rng.sample(range(len(out)), edits):
        out[i] = rng.choice(NOISE) + str(rng.randrange(10))
    return " ".join(out) + "."


def main():
    rng = random.Random(20240229)
    segments, outputs, judgments, fixtures = [], [], [], []
    quality = {}
    step_sources = {}
    seen_mt = set()
    for lp in LPS:
        for n in range(1, SEGMENTS + 1):
            seg = f"seg{n:02d}"
            words = rng.sample(WORDS, 9)
            ref = " ".join(words) + "."
            src_words = SOURCE_ALPHABET[lp]
            sep = "" if lp == "zh-en" else " "
            segments.append((lp, seg, sep.join(rng.choice(src_words) for _ in range(8)) + f" {n}"))
            edits = list(EDITS)
            # mostly A > B > C > D, with some per-segment reordering
            if rng.random() < 0.4:
                i = rng.randrange(3)
                edits[i], edits[i + 1] = edits[i + 1], edits[i]
            mts = {}
            for sys, e in zip(SYSTEMS, edits):
                while True:
                    mt = degrade(words, e, rng) if e else ref
                    if mt not in seen_mt:
                        break
                seen_mt.add(mt)
                mts[sys] = mt
                outputs.append((lp, sys, seg, mt))
                quality[(lp, sys, seg)] = -e
            # each step prompt grades against another system's output
            donors = rng.sample(SYSTEMS, 3)
            overrides = {
                fam: mts[d] for fam, d in zip(["kpe_perplexity", "kpe_token_sim", "kpe_sent_sim"], donors)
            }
            step_sources[(lp, seg)] = (ref, overrides)
            fixtures.append({"lp": lp, "seg_id": seg, "reference": ref, "template_references": overrides})
        pairs = set()
        while len(pairs) < JUDGMENTS:
            seg = f"seg{rng.randrange(1, SEGMENTS + 1):02d}"
            a, b = rng.sample(SYSTEMS, 2)
            if quality[(lp, a, seg)] < quality[(lp, b, seg)]:
                a, b = b, a
            pairs.add((seg, a, b))
        judgments.extend((lp, seg, a, b) for seg, a, b in sorted(pairs))

    assert len(seen_mt) == len(outputs)

    with open("segments.tsv", "w") as f:
        f.writelines("\t".join(r) + "\n" for r in segments)
    with open("outputs.tsv", "w") as f:
        f.writelines("\t".join(r) + "\n" for r in outputs)
    with open("judgments.tsv", "w") as f:
        f.writelines("\t".join(r) + "\n" for r in judgments)
    with open("mock_fixtures.jsonl", "w") as f:
        f.writelines(json.dumps(r, ensure_ascii=False, sort_keys=True) + "\n" for r in fixtures)

    with open("human_scores.tsv", "w") as f:
        for lp in LPS:
            for sys in SYSTEMS:
                vals = [quality[(lp, sys, f"seg{n:02d}")] for n in range(1, SEGMENTS + 1)]
                f.write(f"{lp}\t{sys}\t{10 + sum(vals) / len(vals):.2f}\n")

    manifest = {
        "language_pairs": {
            lp: {
                "segments": SEGMENTS,
                "systems": len(SYSTEMS),
                "judgments": sum(1 for j in judgments if j[0] == lp),
            }
            for lp in LPS
        },
        "system_outputs": len(outputs),
        "total_judgments": len(judgments),
    }
    with open("manifest.json", "w") as f:
        json.dump(manifest, f, indent=2, sort_keys=True)
        f.write("\n")

    # cat5 grades the mock gives each estimator (no step ever fails to parse)
    mt_of = {(lp, sys, seg): mt for lp, sys, seg, mt in outputs}

    def grade(est, lp, sys, seg):
        mt = mt_of[(lp, sys, seg)]
        ref, ov = step_sources[(lp, seg)]
        return {
            "gemba": lambda: mock_class(mt, ref),
            "prompt1": lambda: mock_class(mt, ov["kpe_perplexity"]),
            "prompt2": lambda: mock_class(mt, ov["kpe_token_sim"]),
            "prompt3": lambda: mock_class(mt, ov["kpe_sent_sim"]),
            "cot1": lambda: mock_class(mt, ref),
            "cot2": lambda: mock_class(mt, ref),
        }[est]()

    expected = {}
    for est in ["gemba", "prompt1", "prompt2", "prompt3", "cot1", "cot2"]:
        expected[est] = {}
        for lp in LPS:
            c = d = 0
            for jlp, seg, better, worse in judgments:
                if jlp != lp:
                    continue
                if grade(est, lp, better, seg) > grade(est, lp, worse, seg):
                    c += 1
                else:
                    d += 1
            expected[est][lp] = {"concordant": c, "discordant": d}
    with open("expected_tau.json", "w") as f:
        json.dump(expected, f, indent=2, sort_keys=True)
        f.write("\n")


if __name__ == "__main__":
    main()
