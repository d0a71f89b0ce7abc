"""Regenerates the synthetic fixtures under data/ (deterministic)."""

import csv
import json
import random
from pathlib import Path

DATA = Path(__file__).resolve().parents[2] / "data"
GENDERS = ["male", "female"]
AGES = ["under_29", "30_49", "50_plus"]
LIKERT4 = ["Strongly agree", "Agree", "Disagree", "Strongly disagree"]

SURVEY_QUESTIONS = [
    ("trust_1", "Most people in my neighbourhood can be trusted.", "social_trust"),
    ("trust_2", "When dealing with strangers it pays to be careful.", "social_trust"),
    ("trad_1", "Children should be raised to respect family traditions.", "tradition"),
    ("trad_2", "Religious practice is an important part of daily life.", "tradition"),
    ("econ_1", "Incomes should be made more equal.", "economic_order"),
    ("econ_2", "Competition brings out the best in people.", "economic_order"),
]


def write_jsonl(path, rows):
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="\n") as f:
        for r in rows:
            f.write(json.dumps(r, ensure_ascii=False) + "\n")


def rounded(weights):
    total = sum(weights)
    return [round(w / total, 4) for w in weights]


def skewed(rng, k, peak):
    w = [rng.uniform(0.2, 1.0) for _ in range(k)]
    w[peak] += rng.uniform(1.0, 2.5)
    return w


def survey_fixture():
    rng = random.Random(20240601)
    questions = [
        {"id": qid, "text": text, "options": LIKERT4, "value_dimension": dim,
         "culture_scope": ["US", "CN"], "scale": "likert"}
        for qid, text, dim in SURVEY_QUESTIONS
    ]
    write_jsonl(DATA / "survey" / "questions.jsonl", questions)
    rows = []
    for q in questions:
        for culture in ["US", "CN"]:
            cells = {}
            for g in GENDERS:
                for a in AGES:
                    peak = rng.randrange(4)
                    cells[(g, a)] = rounded(skewed(rng, 4, peak))
            pop = rounded([sum(c[i] for c in cells.values()) for i in range(4)])
            for i, p in enumerate(pop):
                rows.append(["synthetic_v1", q["id"], culture, "", "", i, p])
            for (g, a), dist in cells.items():
                for i, p in enumerate(dist):
                    rows.append(["synthetic_v1", q["id"], culture, g, a, i, p])
    write_csv(DATA / "survey" / "human_distributions.csv",
              ["survey_id", "question_id", "culture", "gender", "age_group", "option_index", "proportion"], rows)


def identity_fixture():
    rng = random.Random(7)
    questions = [
        {"id": f"id_{n}", "text": text, "options": LIKERT4, "value_dimension": dim,
         "culture_scope": ["US", "CN"], "scale": "likert"}
        for n, (text, dim) in enumerate([
            ("Hard work usually brings a better life.", "economic_order"),
            ("Elders deserve the final say in family matters.", "tradition"),
            ("Neighbours generally keep their promises.", "social_trust"),
        ], start=1)
    ]
    write_jsonl(DATA / "survey" / "identity" / "questions.jsonl", questions)
    rows = []
    for q in questions:
        dist = rounded(skewed(rng, 4, rng.randrange(4)))
        for culture in ["US", "CN"]:
            for i, p in enumerate(dist):
                rows.append(["identity", q["id"], culture, "", "", i, p])
            for g in GENDERS:
                for a in AGES:
                    for i, p in enumerate(dist):
                        rows.append(["identity", q["id"], culture, g, a, i, p])
    write_csv(DATA / "survey" / "identity" / "human_distributions.csv",
              ["survey_id", "question_id", "culture", "gender", "age_group", "option_index", "proportion"], rows)


def align_fixture():
    rng = random.Random(31337)
    rows = []
    for qid, _, _ in SURVEY_QUESTIONS[:4]:
        for country in ["C1", "C2", "C3"]:
            dist = rounded(skewed(rng, 4, rng.randrange(4)))
            for i, p in enumerate(dist):
                rows.append([qid, country, i, p])
    write_csv(DATA / "align" / "country_distributions.csv",
              ["question_id", "country", "option_index", "proportion"], rows)


def mark_fixture():
    questions = [
        {"id": "m_gov", "text": "How much should government reduce differences in income?",
         "options": ["A great deal", "Somewhat", "A little", "Not at all"],
         "value_dimension": "economic_order", "culture_scope": ["US"], "scale": "likert"},
        {"id": "m_trust", "text": "How much do you trust people you meet for the first time?",
         "options": ["Completely", "Somewhat", "Not very much", "Not at all"],
         "value_dimension": "social_trust", "culture_scope": ["US"], "scale": "likert"},
    ]
    write_jsonl(DATA / "mark" / "questions.jsonl", questions)
    rng = random.Random(4242)
    ideologies = ["liberal", "moderate", "conservative"]
    opinions = {
        "liberal": ["supports expanded public services", "worries about inequality"],
        "moderate": ["prefers gradual change", "distrusts both parties"],
        "conservative": ["favours lower taxes", "values self-reliance"],
    }
    locations = ["Ohio", "Texas", "California", "New York", "Georgia"]
    rows = []
    for n in range(1, 26):
        rid = f"r{n:03d}"
        g = rng.choice(GENDERS)
        a = rng.choice(AGES)
        ideo = rng.choice(ideologies)
        op = rng.choice(opinions[ideo])
        loc = rng.choice(locations)
        lean = {"liberal": 0, "moderate": 1, "conservative": 2}[ideo]
        gov = min(3, max(0, lean + rng.choice([-1, 0, 0, 1])))
        trust = rng.choice([0, 1, 1, 2, 2, 3])
        rows.append([rid, g, a, loc, ideo, op, "m_gov", gov])
        rows.append([rid, g, a, loc, ideo, op, "m_trust", trust])
    write_csv(DATA / "mark" / "respondents.csv",
              ["respondent_id", "gender", "age_group", "location", "ideology", "opinion", "question_id", "choice"],
              rows)


def write_csv(path, header, rows):
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


if __name__ == "__main__":
    survey_fixture()
    identity_fixture()
    align_fixture()
    mark_fixture()
