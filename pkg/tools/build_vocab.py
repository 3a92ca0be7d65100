"""Build the bundled BPE vocabulary file.

Run from the repository root:

    python3 tools/build_vocab.py [merges]

Trains the tokenizer's rank table on a fixed synthetic corpus (common English
words, chat-style sentences, JSON log structure, and technical vocabulary) and
writes ``src/skillmap/data/bpe_vocab.txt``.  The build is deterministic: same
script, same output bytes.
"""

from __future__ import annotations

import random
import sys
import time
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from skillmap.tokenizer import BpeTokenizer, dump_vocabulary, train_vocabulary

COMMON_WORDS = """
the of and a to in is you that it he was for on are as with his they I at be
this have from or one had by word but not what all were we when your can said
there use an each which she do how their if will up other about out many then
them these so some her would make like him into time has look two more write go
see number no way could people my than first water been call who oil its now
find long down day did get come made may part over new sound take only little
work know place year live me back give most very after thing our just name good
sentence man think say great where help through much before line right too mean
old any same tell boy follow came want show also around form three small set put
end does another well large must big even such because turn here why ask went
men read need land different home us move try kind hand picture again change off
play spell air away animal house point page letter mother answer found study
still learn should world high every near add food between own below country
plant last school father keep tree never start city earth eye light thought
head under story saw left don't few while along might close something seem next
hard open example begin life always those both paper together got group often
run important until children side feet car mile night walk white sea began grow
took river four carry state once book hear stop without second later miss idea
enough eat face watch far really almost let above girl sometimes mountain cut
young talk soon list song being leave family body music color stand sun
question fish area mark dog horse birds problem complete room knew since ever
piece told usually didn't friends easy heard order red door sure become top
ship across today during short better best however low hours black products
happened whole measure remember early waves reached listen wind rock space
covered fast several hold himself toward five step morning passed vowel true
hundred against pattern numeral table north slowly money map farm pulled draw
voice seen cold cried plan notice south sing war ground fall king town I'll
unit figure certain field travel wood fire upon done English road half ten
fly gave box finally wait correct oh quickly person became shown minutes strong
verb stars front feel fact inches street decided contain course surface produce
building ocean class note nothing rest carefully scientists inside wheels stay
green known island week less machine base ago stood plane system behind ran
round boat game force brought understand warm common bring explain dry though
language shape deep thousands yes clear equation yet government filled heat
full hot check object am rule among noun power cannot able six size dark ball
material special heavy fine pair circle include built
""".split()

TECH_WORDS = """
python rust docker kubernetes fastapi numpy pandas pytest tokenizer pipeline
server client provider model context window token chunk budget channel message
workspace export archive profile skill knowledge annotation rating metric
error evaluation report dataset corpus prompt template extraction level reason
user member directory timestamp thread reply reaction join event system
backend frontend login session account email password score estimate average
median deviation square absolute mean root factor safety effective reserved
segment encode decode vocabulary merge rank pair byte string json schema http
request response endpoint route status retry backoff timeout credential
deploy release commit branch review tests coverage refactor latency cache
queue worker async thread lock atomic write rename store document database
survey figure listing table equation chapter section paragraph appendix
machine learning neural network transformer embedding gradient descent
agile sprint standup retro roadmap milestone deadline quarter planning
slack gmail github gitlab jira notion figma excel linux macos windows
CHI ETRA UbiComp ISWC UIST CVPR SIGGRAPH NLP LLM API CLI JSON HTTP URL
GPU CPU RAM SSD SQL AWS GCP UID BPE MAE RMSE OK TODO FYI PR CI CD UX UI
Python Rust Docker Kubernetes FastAPI NumPy Pandas React TypeScript Git
Slack GitHub Jira Notion Figma Gemini Claude Anthropic OpenAI Google
Watanabe Ishimaru Kaiserslautern Osaka Germany Japan India Chile Iran
""".split()

SENTENCE_SHAPES = [
    "hey {a}, did you get a chance to look at the {b} yet?",
    "i pushed the {a} changes, the {b} tests are green now",
    "can someone review my {a} PR before the {b} meeting?",
    "the {a} job failed again, looks like a {b} timeout",
    "we should probably document the {a} setup in the {b} guide",
    "thanks! the {a} fix worked, {b} is back up",
    "reminder: {a} sync at 10am, agenda is {b} planning",
    "I compared {a} with {b} and the difference is tiny",
    "uploading the {a} results to the shared {b} folder",
    "does anyone know why the {a} numbers differ from the {b} dashboard?",
]


def build_corpus() -> str:
    rng = random.Random(20240817)
    parts: list[str] = []

    # Plain word soup, weighted toward common words.
    pool = COMMON_WORDS * 4 + TECH_WORDS * 2
    for _ in range(4000):
        parts.append(" ".join(rng.choice(pool) for _ in range(12)))

    # Chat-flavoured sentences.
    for _ in range(1500):
        shape = rng.choice(SENTENCE_SHAPES)
        parts.append(shape.format(a=rng.choice(TECH_WORDS), b=rng.choice(TECH_WORDS)))

    # JSON log structure, so serialized archives tokenize efficiently.
    for i in range(800):
        ts = f"{1500000000 + rng.randrange(300000000)}.{rng.randrange(1000000):06d}"
        parts.append(
            '{"user": "UID%d", "type": "message", "ts": "%s", "text": "%s"}'
            % (rng.randrange(40), ts, rng.choice(SENTENCE_SHAPES).format(
                a=rng.choice(TECH_WORDS), b=rng.choice(TECH_WORDS)))
        )
        parts.append('"reply_count": %d, "reactions": [{"name": "+1", "count": %d}]'
                     % (rng.randrange(9), rng.randrange(9)))

    # Digits, punctuation runs, a little unicode.
    for _ in range(400):
        parts.append(str(rng.randrange(10 ** rng.randrange(1, 10))))
    parts.append("... --- === ``` ::: // == -> <- >= <= != () [] {} <@UID0> :+1:")
    parts.append("naïve café über straße tokyo 東京 データ モデル ありがとう")

    return "\n".join(parts)


def main() -> None:
    merges = int(sys.argv[1]) if len(sys.argv) > 1 else 4000
    corpus = build_corpus()
    print(f"corpus: {len(corpus):,} chars")
    t0 = time.time()
    ranks = train_vocabulary(corpus, merges)
    print(f"trained {len(ranks):,} tokens in {time.time() - t0:.1f}s")

    out = Path(__file__).resolve().parents[1] / "src" / "skillmap" / "data" / "bpe_vocab.txt"
    out.parent.mkdir(parents=True, exist_ok=True)
    dump_vocabulary(ranks, out)
    print(f"wrote {out} ({out.stat().st_size:,} bytes)")

    tok = BpeTokenizer.from_file(out)
    sample = 'hey, I pushed the tokenizer changes {"user": "UID0", "ts": "1700000000.000000"}'
    ids = tok.encode(sample)
    assert tok.decode(ids) == sample
    print(f"sample: {len(sample)} chars -> {len(ids)} tokens")


if __name__ == "__main__":
    main()
