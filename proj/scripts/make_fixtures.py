#!/usr/bin/env python3
"""Regenerates the bundled fixtures.

Writes:
  fixtures/smoke_config.json     small pipeline config used by tests
  fixtures/students/alice.json   record file (5 past + 2 simulation)
  fixtures/students/bob.json     record file (5 past + 2 simulation)
  fixtures/golden.fixture.json   ordinal-matched scripted responses for the
                                 full prototype+refine pipeline over both
                                 students (jobs=1)
  fixtures/grid.fixture.json     cycling fixture serving every predictor x
                                 simulator configuration
  fixtures/golden/expected.json  every number the golden run must produce,
                                 derived here independently of the C++ code

The expected values are computed from scratch in this script (cosine over
token counts, overlap retrieval, ROUGE-L, BLEU-4, means), so the C++
pipeline and this generator must agree for the acceptance suite to pass.
"""

import json
import math
import re
from collections import Counter
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
FIXTURES = ROOT / "fixtures"

CONFIG = {
    "M": 5,
    "N": 2,
    "p": 3,
    "L": 3,
    "B": 2,
    "delta": 0.9,
    "concept_cap": 15,
    "retrieval_count": 1,
    "refine_temperature": 0.7,
}


# ---------------------------------------------------------------------------
# Independent metric implementations (oracles for the C++ side)
# ---------------------------------------------------------------------------

def tokenize(text):
    return re.findall(r"[a-z0-9]+", text.lower())


def cosine(a_tokens, b_tokens):
    a, b = Counter(a_tokens), Counter(b_tokens)
    if not a or not b:
        return 0.0
    dot = sum(count * b[token] for token, count in a.items())
    if dot == 0:
        return 0.0
    na = math.sqrt(sum(c * c for c in a.values()))
    nb = math.sqrt(sum(c * c for c in b.values()))
    return dot / (na * nb)


def select_top_p(node_names, description, p):
    scored = sorted(
        ((cosine(tokenize(description), tokenize(name)), name) for name in node_names),
        key=lambda pair: (-pair[0], pair[1]),
    )
    return [(name, score) for score, name in scored[:p]]


def retrieve(past, record_concepts, targets, k):
    target_set = set(targets)
    ranked = sorted(
        past,
        key=lambda r: (-len(record_concepts[r["record_id"]] & target_set), -r["order_index"]),
    )
    return [r["record_id"] for r in ranked[:k]]


def lcs_length(a, b):
    prev = [0] * (len(b) + 1)
    for x in a:
        cur = [0]
        for j, y in enumerate(b, 1):
            cur.append(prev[j - 1] + 1 if x == y else max(prev[j], cur[j - 1]))
        prev = cur
    return prev[len(b)]


def rouge_l(candidate, reference):
    c, r = tokenize(candidate), tokenize(reference)
    if not c or not r:
        return 0.0
    lcs = lcs_length(c, r)
    if lcs == 0:
        return 0.0
    precision, recall = lcs / len(c), lcs / len(r)
    return 100.0 * 2 * precision * recall / (precision + recall)


def bleu_4(candidate, reference):
    c, r = tokenize(candidate), tokenize(reference)
    if not c or not r:
        return 0.0
    log_sum = 0.0
    for n in range(1, 5):
        c_grams = Counter(tuple(c[i:i + n]) for i in range(len(c) - n + 1))
        r_grams = Counter(tuple(r[i:i + n]) for i in range(len(r) - n + 1))
        total = sum(c_grams.values())
        matches = sum(min(count, r_grams[gram]) for gram, count in c_grams.items())
        if total == 0 or matches == 0:
            precision = (matches + 1) / (total + 1)
        else:
            precision = matches / total
        log_sum += math.log(precision)
    bleu = math.exp(log_sum / 4.0)
    if len(c) < len(r):
        bleu *= math.exp(1.0 - len(r) / len(c))
    return 100.0 * bleu


def level_from_accuracy(acc):
    return max(1, min(5, math.floor(1.0 + 4.0 * acc + 0.5)))


# ---------------------------------------------------------------------------
# Students
# ---------------------------------------------------------------------------

def record(record_id, order_index, statement, behavior, correct, solution):
    return {
        "record_id": record_id,
        "order_index": order_index,
        "task_statement": statement,
        "behavior": behavior,
        "is_correct": correct,
        "solution": solution,
        "language_tag": "python",
    }


ALICE = {
    "student_id": "alice",
    "records": [
        record("a1", 0, "Print the numbers 1 through 5, one per line.",
               "Wrote a for loop over range(1, 6) and printed each number.", True,
               "for i in range(1, 6):\n    print(i)"),
        record("a2", 1, "Sum the numbers from 1 to 100 and print the total.",
               "Accumulated the total inside a for loop before printing.", True,
               "total = 0\nfor i in range(1, 101):\n    total += i\nprint(total)"),
        record("a3", 2, "Compute the product of the numbers from 1 to 10.",
               "Initialized the accumulator to zero, so every product came out zero.", False,
               "product = 0\nfor i in range(1, 11):\n    product *= i\nprint(product)"),
        record("a4", 3, "Print whether a number is even or odd.",
               "Used the modulus in a conditional and printed the right branch.", True,
               "n = int(input())\nif n % 2 == 0:\n    print('even')\nelse:\n    print('odd')"),
        record("a5", 4, "Print each character of a word on its own line.",
               "Iterated the string directly and printed each character.", True,
               "word = input()\nfor ch in word:\n    print(ch)"),
        record("a6", 5, "Sum the numbers from 1 to 10 using a loop and print the result.",
               "Expected to reuse the accumulator idiom without trouble.", True,
               "total = 0\nfor i in range(1, 11):\n    total += i\nprint(total)"),
        record("a7", 6, "Read a word and print each of its characters on separate lines.",
               "Expected to iterate the word directly as in earlier tasks.", True,
               "word = input()\nfor ch in word:\n    print(ch)"),
    ],
}

BOB = {
    "student_id": "bob",
    "records": [
        record("b1", 0, "Extract the first three characters of a string.",
               "Sliced with s[:3] directly.", True,
               "s = input()\nprint(s[:3])"),
        record("b2", 1, "Check whether the first half of a string equals the second half.",
               "Sliced both halves and compared them with ==.", True,
               "s = input()\nhalf = len(s) // 2\nprint(s[:half] == s[half:])"),
        record("b3", 2, "Print the remainder of 17 divided by 5.",
               "Mixed up the operands of the modulus operator.", False,
               "print(5 % 17)"),
        record("b4", 3, "Build a list of the squares of 0 through 4.",
               "Used a list comprehension over range(5).", True,
               "nums = [n * n for n in range(5)]\nprint(nums)"),
        record("b5", 4, "Print True if 3 * 7 is greater than 2 ** 4.",
               "Compared the two expressions with the > operator.", True,
               "print(3 * 7 > 2 ** 4)"),
        record("b6", 5, "Slice a string into two pieces and print whether the first piece is smaller.",
               "Expected to slice and compare without trouble.", True,
               "s = input()\nfirst = s[:3]\nsecond = s[3:]\nprint(first < second)"),
        record("b7", 6, "Use a list comprehension over a range to collect squares, then print them.",
               "Expected to fumble the range bounds again.", False,
               "nums = [n * n for n in range(1, 5)]\nprint(nums)"),
    ],
}


# ---------------------------------------------------------------------------
# Golden scenario: concepts, verdicts, edges per record
# ---------------------------------------------------------------------------

# record_id -> (node response concepts as displayed, local verdicts, edge response or None)
BUILD_PLAN = {
    "a1": (["For Loops", "Print Function"], ["Good", "Good"],
           "For Loops Used_for Print Function"),
    "a2": (["For Loops", "Integer Arithmetic", "Accumulator Pattern"], ["Good", "Good", "Good"],
           "For Loops Used_for Integer Arithmetic"),
    "a3": (["For Loops", "Integer Arithmetic", "Accumulator Pattern"], ["Good", "Bad", "Bad"],
           "For Loops Prerequisite_of Integer Arithmetic"),
    "a4": (["Conditional Statements", "Integer Arithmetic"], ["Good", "Good"],
           "Integer Arithmetic Prerequisite_of Conditional Statements"),
    "a5": (["String Iteration", "For Loops", "Print Function"], ["Good", "Good", "Good"],
           "For Loops Used_for String Iteration"),
    "b1": (["String Slicing"], ["Good"], None),
    "b2": (["String Slicing", "Comparison Operators"], ["Good", "Good"], "none"),
    "b3": (["Modulus Operator"], ["Bad"], None),
    "b4": (["List Comprehension", "Range Function"], ["Good", "Good"],
           "Range Function Used_for List Comprehension"),
    "b5": (["Comparison Operators", "Range Function"], ["Bad", "Good"],
           "Comparison Operators Used_for Range Function"),
}

BUILD_DESCRIPTIONS = {
    "a1": "Print a short run of numbers with a loop.",
    "a2": "Accumulate a sum across a numeric range.",
    "a3": "Multiply a numeric range into a running product.",
    "a4": "Branch on parity and print the matching label.",
    "a5": "Walk a string character by character and print each one.",
    "b1": "Take a fixed-length prefix of a string.",
    "b2": "Split a string in half and compare the pieces.",
    "b3": "Apply the modulus operator to two small numbers.",
    "b4": "Collect squared values with a list comprehension.",
    "b5": "Compare two arithmetic expressions.",
}

# Simulation-task descriptions are crafted so prototype mapping lands on
# specific concepts and retrieval exercises both the strict-max and the
# recency tie-break paths.
PREDICT_DESCRIPTIONS = {
    "a6": "Sum integers with for loops and integer arithmetic using the accumulator pattern.",
    "a7": "Iterate over a string and print each character.",
    "b6": "Compare string slicing results with comparison operators.",
    "b7": "Build a list comprehension from a range function after slicing.",
}

PRED_RESPONSES = {
    "a6": "VERDICT: correct\nBEHAVIOR: Applies the accumulator pattern correctly with a for loop.",
    "a7": "VERDICT: incorrect\nBEHAVIOR: Confuses character variables while iterating the string.",
    "b6": "VERDICT: correct\nBEHAVIOR: Slices the string and compares the pieces correctly.",
    "b7": "VERDICT: incorrect\nBEHAVIOR: Misuses the range bounds inside the comprehension.",
}

PREDICTED_CORRECT = {"a6": True, "a7": False, "b6": True, "b7": False}


def fenced(code, prose=None):
    block = "```python\n" + code + "\n```"
    return (prose + "\n" + block) if prose else block


TRUTH = {r["record_id"]: r for r in ALICE["records"] + BOB["records"]}

A7_FINAL = "word = input()\nfor c in word:\n    print(c)"

# task -> (initial draft, [per-iteration ([candidate texts], [value responses])])
REFINE_PLAN = {
    "a6": (fenced("total = 0\nprint(total)"),
           [([fenced(TRUTH["a6"]["solution"], "Here is the refined attempt."),
              fenced("total = 0\nfor i in range(10):\n    total += i\nprint(total)")],
             ["0.95", "0.40"])]),
    "a7": (fenced("word = input()\nprint(word)"),
           [([fenced("word = input()\nprint(word[0])"),
              fenced("for c in input():\n    print(c, end='')")],
             ["I rate this 0.3", "0.7"]),
            ([fenced(A7_FINAL), fenced("word = input()\nprint(list(word))")],
             ["0.92", "0.5"])]),
    "b6": (fenced("s = input()\nprint(s)"),
           [([fenced(TRUTH["b6"]["solution"], "Second attempt below."),
              fenced("s = input()\nprint(s[:3])")],
             ["0.93", "0.45"])]),
    "b7": (fenced("nums = []\nprint(nums)"),
           [([fenced("nums = [n for n in range(5)]\nprint(nums)"),
              fenced("print([0, 1, 4, 9, 16])")],
             ["0.6", "0.2"]),
            ([fenced(TRUTH["b7"]["solution"]), fenced("nums = [n * n for n in range(4)]\nprint(nums)")],
             ["0.94", "0.35"])]),
}

FINAL_SOLUTIONS = {
    "a6": TRUTH["a6"]["solution"],
    "a7": A7_FINAL,
    "b6": TRUTH["b6"]["solution"],
    "b7": TRUTH["b7"]["solution"],
}

# Judge order per student: (con1, con2) per task, then cognitive per task.
JUDGE_RESPONSES = {
    "alice": ["4", "5", "3", "Score: 4", "5", "4"],
    "bob": ["5", "5", "4", "5", "4", "2"],
}
JUDGE_SCORES = {
    "alice": {"con1": [4, 3], "con2": [5, 4], "cognitive": [5, 4]},
    "bob": {"con1": [5, 4], "con2": [5, 5], "cognitive": [4, 2]},
}

GLOBAL_SUMMARIES = {
    "alice": {
        "accumulator pattern": "Understands accumulation but slips when tasks get longer.",
        "conditional statements": "Applies conditionals reliably.",
        "for loops": "Strong command of for loops.",
        "integer arithmetic": "Arithmetic is mostly solid with occasional slips.",
        "print function": "Uses print confidently.",
        "string iteration": "Comfortable iterating over strings.",
    },
    "bob": {
        "comparison operators": "Comparison results are hit or miss.",
        "list comprehension": "Builds list comprehensions correctly.",
        "modulus operator": "Struggles with modulus arithmetic.",
        "range function": "Handles range bounds well.",
        "string slicing": "Slices strings accurately.",
    },
}


# ---------------------------------------------------------------------------
# Derive the expected graph, predictions, and report values
# ---------------------------------------------------------------------------

def derive_student(student):
    sid = student["student_id"]
    records = sorted(student["records"], key=lambda r: r["order_index"])
    past, sims = records[:CONFIG["M"]], records[CONFIG["M"]:CONFIG["M"] + CONFIG["N"]]

    nodes = {}   # canonical -> {good, bad, records: [record_id]}
    edges = {}   # (src, dst) -> [relation...]
    record_concepts = {}
    for r in past:
        concepts, verdicts, edge_response = BUILD_PLAN[r["record_id"]]
        canon = [c.lower() for c in concepts]
        record_concepts[r["record_id"]] = set(canon)
        for name, verdict in zip(canon, verdicts):
            node = nodes.setdefault(name, {"good": 0, "bad": 0, "records": []})
            node["good" if verdict == "Good" else "bad"] += 1
            node["records"].append(r["record_id"])
        if edge_response and edge_response != "none":
            src, _, rest = edge_response.partition(" Used_for ")
            relation = "Used_for"
            if not rest:
                src, _, rest = edge_response.partition(" Prerequisite_of ")
                relation = "Prerequisite_of"
            edges.setdefault((src.lower(), rest.lower()), []).append(relation)

    expected_nodes = {}
    for name in sorted(nodes):
        good, bad = nodes[name]["good"], nodes[name]["bad"]
        dominant = "Good" if good > bad else ("Bad" if bad > good else "Mixed")
        expected_nodes[name] = {
            "good_count": good,
            "bad_count": bad,
            "dominant": dominant,
            "summary": GLOBAL_SUMMARIES[sid][name],
            "state_count": good + bad,
        }

    expected_edges = []
    for (src, dst) in sorted(edges):
        library = edges[(src, dst)]
        counts = Counter(library)
        best, best_count = library[0], counts[library[0]]
        for relation in library:
            if counts[relation] > best_count:
                best, best_count = relation, counts[relation]
        expected_edges.append({
            "source": src, "target": dst, "library": library, "resolved": best,
        })

    node_names = sorted(nodes)
    predictions = []
    for task in sims:
        tid = task["record_id"]
        description = PREDICT_DESCRIPTIONS[tid]
        matched = select_top_p(node_names, description, CONFIG["p"])
        retrieved = retrieve(past, record_concepts, [name for name, _ in matched],
                             CONFIG["retrieval_count"])
        verdict_text = PRED_RESPONSES[tid]
        behavior = verdict_text.split("BEHAVIOR: ", 1)[1]
        predictions.append({
            "task_id": tid,
            "predicted_correct": PREDICTED_CORRECT[tid],
            "description": behavior,
            "matched_concepts": [{"name": n, "score": s} for n, s in matched],
            "retrieved_record_ids": retrieved,
        })

    solutions = []
    for task in sims:
        tid = task["record_id"]
        _, iterations = REFINE_PLAN[tid]
        trace = [[float(v.split()[-1]) for v in values] for _, values in iterations]
        solutions.append({
            "task_id": tid,
            "solution": FINAL_SOLUTIONS[tid],
            "iterations_used": len(trace),
            "score_trace": trace,
            "final_score": max(trace[-1]),
        })

    per_task = []
    matches = 0
    for i, task in enumerate(sims):
        tid = task["record_id"]
        if PREDICTED_CORRECT[tid] == task["is_correct"]:
            matches += 1
        per_task.append({
            "task_id": tid,
            "predicted_correct": PREDICTED_CORRECT[tid],
            "truth_correct": task["is_correct"],
            "rouge_l": rouge_l(FINAL_SOLUTIONS[tid], task["solution"]),
            "bleu4": bleu_4(FINAL_SOLUTIONS[tid], task["solution"]),
            "con1": JUDGE_SCORES[sid]["con1"][i],
            "con2": JUDGE_SCORES[sid]["con2"][i],
        })

    scores = JUDGE_SCORES[sid]
    report = {
        "student_id": sid,
        "acc": matches / len(sims),
        "con1_mean": sum(scores["con1"]) / len(scores["con1"]),
        "con2_mean": sum(scores["con2"]) / len(scores["con2"]),
        "cognitive_score": sum(scores["cognitive"]) / len(scores["cognitive"]),
        "rouge_l_mean": sum(r["rouge_l"] for r in per_task) / len(per_task),
        "bleu4_mean": sum(r["bleu4"] for r in per_task) / len(per_task),
        "per_task": per_task,
    }

    past_acc = sum(1 for r in past if r["is_correct"]) / len(past)
    return {
        "nodes": expected_nodes,
        "edges": expected_edges,
        "predictions": predictions,
        "solutions": solutions,
        "report": report,
        "level": level_from_accuracy(past_acc),
        "past_accuracy": past_acc,
    }


def check_scenario(expected):
    """The tie-break and coverage properties the fixtures were designed for."""
    alice, bob = expected["alice"], expected["bob"]
    # a6 retrieval must hit the recency tie-break (a2 and a3 overlap equally).
    assert alice["predictions"][0]["retrieved_record_ids"] == ["a3"]
    assert [m["name"] for m in alice["predictions"][0]["matched_concepts"]] == \
        ["accumulator pattern", "for loops", "integer arithmetic"]
    # a7 retrieval is a strict max.
    assert alice["predictions"][1]["retrieved_record_ids"] == ["a5"]
    assert [m["name"] for m in alice["predictions"][1]["matched_concepts"]] == \
        ["print function", "string iteration", "accumulator pattern"]
    assert bob["predictions"][0]["retrieved_record_ids"] == ["b2"]
    assert bob["predictions"][1]["retrieved_record_ids"] == ["b4"]
    # The conflicting alice edge resolves by first occurrence.
    conflict = [e for e in alice["edges"] if e["target"] == "integer arithmetic"][0]
    assert conflict["library"] == ["Used_for", "Prerequisite_of"]
    assert conflict["resolved"] == "Used_for"
    # Dominance covers Good, Bad, and Mixed.
    assert alice["nodes"]["accumulator pattern"]["dominant"] == "Mixed"
    assert alice["nodes"]["integer arithmetic"]["dominant"] == "Good"
    assert bob["nodes"]["modulus operator"]["dominant"] == "Bad"
    assert bob["nodes"]["string slicing"]["dominant"] == "Good"
    # Early exit after one iteration and after two.
    assert [s["iterations_used"] for s in alice["solutions"]] == [1, 2]
    assert [s["iterations_used"] for s in bob["solutions"]] == [1, 2]
    assert alice["report"]["acc"] == 0.5 and bob["report"]["acc"] == 1.0
    assert alice["report"]["per_task"][0]["rouge_l"] == 100.0
    assert alice["report"]["per_task"][1]["rouge_l"] == 75.0
    assert alice["level"] == 4 and bob["level"] == 4


# ---------------------------------------------------------------------------
# Fixture assembly (ordinal entries in pipeline call order)
# ---------------------------------------------------------------------------

def golden_entries():
    entries = []

    def add(role, *responses):
        entries.append({"role": role, "match": {"ordinal": None}, "responses": list(responses)})

    for student in (ALICE, BOB):
        sid = student["student_id"]
        records = sorted(student["records"], key=lambda r: r["order_index"])
        past, sims = records[:CONFIG["M"]], records[CONFIG["M"]:CONFIG["M"] + CONFIG["N"]]

        # build: desc, node, [edge], local per record, then global per node.
        for r in past:
            rid = r["record_id"]
            concepts, verdicts, edge_response = BUILD_PLAN[rid]
            add("desc", BUILD_DESCRIPTIONS[rid])
            add("node", "\n".join(f"{i + 1}. {c}" for i, c in enumerate(concepts)))
            if len(concepts) >= 2:
                add("edge", edge_response)
            add("local", "\n".join(f"{c}: {v}" for c, v in zip(concepts, verdicts)))
        for name in sorted(GLOBAL_SUMMARIES[sid]):
            add("global", GLOBAL_SUMMARIES[sid][name])

        # predict: desc + pred per simulation task.
        for task in sims:
            add("desc", PREDICT_DESCRIPTIONS[task["record_id"]])
            add("pred", PRED_RESPONSES[task["record_id"]])

        # simulate: initial refine, then per iteration one refine (B samples)
        # and B value calls.
        for task in sims:
            initial, iterations = REFINE_PLAN[task["record_id"]]
            add("refine", initial)
            for candidates, values in iterations:
                add("refine", *candidates)
                for v in values:
                    add("value", v)

        # evaluate: con1 + con2 per task, then cognitive per task.
        for response in JUDGE_RESPONSES[sid]:
            add("judge", response)

    # Ordinal slots are implicit (per-role arrival order); make them explicit.
    counters = Counter()
    for entry in entries:
        entry["match"]["ordinal"] = counters[entry["role"]]
        counters[entry["role"]] += 1
    return entries, dict(counters)


GRID_FIXTURE = {
    "cycle_roles": True,
    "entries": [
        {"role": "desc", "match": {"ordinal": 0},
         "responses": ["A short task about loops and arithmetic practice."]},
        {"role": "node", "match": {"ordinal": 0},
         "responses": ["1. Loops\n2. Arithmetic"]},
        {"role": "edge", "match": {"ordinal": 0},
         "responses": ["Loops Prerequisite_of Arithmetic"]},
        {"role": "local", "match": {"ordinal": 0},
         "responses": ["Loops: Good\nArithmetic: Good"]},
        {"role": "global", "match": {"ordinal": 0},
         "responses": ["Solid grasp of the idea."]},
        {"role": "pred", "match": {"ordinal": 0},
         "responses": ["VERDICT: correct\nBEHAVIOR: Works through the task steadily."]},
        {"role": "refine", "match": {"ordinal": 0},
         "responses": [fenced("print('draft')", "Here is a try."), fenced("print('alternative')")]},
        {"role": "value", "match": {"ordinal": 0}, "responses": ["0.95"]},
        {"role": "judge", "match": {"ordinal": 0}, "responses": ["4"]},
    ],
}


def main():
    expected = {"alice": derive_student(ALICE), "bob": derive_student(BOB)}
    check_scenario(expected)

    reports = [expected["alice"]["report"], expected["bob"]["report"]]
    aggregate = {
        "acc": sum(r["acc"] for r in reports) / 2,
        "con1_mean": sum(r["con1_mean"] for r in reports) / 2,
        "con2_mean": sum(r["con2_mean"] for r in reports) / 2,
        "cognitive_score": sum(r["cognitive_score"] for r in reports) / 2,
        "rouge_l_mean": sum(r["rouge_l_mean"] for r in reports) / 2,
        "bleu4_mean": sum(r["bleu4_mean"] for r in reports) / 2,
        "student_count": 2,
    }

    entries, role_counts = golden_entries()
    assert role_counts == {
        "desc": 14, "node": 10, "edge": 8, "local": 10, "global": 11,
        "pred": 4, "refine": 10, "value": 12, "judge": 12,
    }, role_counts

    (FIXTURES / "students").mkdir(parents=True, exist_ok=True)
    (FIXTURES / "golden").mkdir(parents=True, exist_ok=True)

    def dump(path, payload):
        path.write_text(json.dumps(payload, indent=2) + "\n")
        print(f"wrote {path.relative_to(ROOT)}")

    dump(FIXTURES / "smoke_config.json", CONFIG)
    dump(FIXTURES / "students" / "alice.json", ALICE)
    dump(FIXTURES / "students" / "bob.json", BOB)
    dump(FIXTURES / "golden.fixture.json", entries)
    dump(FIXTURES / "grid.fixture.json", GRID_FIXTURE)
    dump(FIXTURES / "golden" / "expected.json", {
        "config": CONFIG,
        "role_counts": role_counts,
        "students": expected,
        "aggregate": aggregate,
    })


if __name__ == "__main__":
    main()
