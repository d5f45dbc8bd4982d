#!/usr/bin/env python3
"""Regenerates the exercise bank, the labeled evaluation fixture and the mock
scripts. Every solution is run against its examples before anything is written.

    python3 tools/make_fixtures.py [--root .]
"""

import argparse
import json
import subprocess
import sys
from pathlib import Path

# (id, title, category path, description, solution, example inputs, computation-error mutation)
EXERCISES = [
    ("ex01", "Say hello", ["Basics", "Input and output"],
     "Read a name and print `Hello, <name>!`.",
     'name = input()\nprint("Hello, " + name + "!")',
     ["Alice", "Bob"], ('name + "!"', 'name[1:] + "!"')),
    ("ex02", "Sum of two numbers", ["Basics", "Arithmetic"],
     "Read two integers, one per line, and print their sum.",
     "a = int(input())\nb = int(input())\nprint(a + b)",
     ["3\n4", "10\n-2"], ("a + b", "a - b")),
    ("ex03", "Rectangle area", ["Basics", "Arithmetic"],
     "Read the width and height of a rectangle on one line and print its area.",
     "w, h = map(int, input().split())\nprint(w * h)",
     ["3 4", "5 6"], ("w * h", "w + h")),
    ("ex04", "Celsius to Fahrenheit", ["Basics", "Arithmetic"],
     "Read a temperature in Celsius and print it in Fahrenheit as a float.",
     "c = float(input())\nprint(c * 9 / 5 + 32)",
     ["0", "100"], ("9 / 5", "5 / 9")),
    ("ex05", "Quotient and remainder", ["Basics", "Arithmetic"],
     "Read two integers a and b on one line and print a // b and a % b separated by a space.",
     "a, b = map(int, input().split())\nprint(a // b, a % b)",
     ["17 5", "9 3"], ("a // b", "a / b")),
    ("ex06", "Even or odd", ["Conditionals"],
     "Read an integer and print `even` or `odd`.",
     'n = int(input())\nif n % 2 == 0:\n    print("even")\nelse:\n    print("odd")',
     ["4", "7"], ("n % 2 == 0", "n % 2 == 1")),
    ("ex07", "Largest of three", ["Conditionals"],
     "Read three integers on one line and print the largest without using max().",
     "a, b, c = map(int, input().split())\nbiggest = a\nif b > biggest:\n    biggest = b\n"
     "if c > biggest:\n    biggest = c\nprint(biggest)",
     ["1 5 3", "9 2 4"], ("if c > biggest:", "if c < biggest:")),
    ("ex08", "Letter grade", ["Conditionals"],
     "Read a score from 0 to 100. Print A for 90 and above, B for 80 and above, C for 70 and above, otherwise F.",
     'score = int(input())\nif score >= 90:\n    print("A")\nelif score >= 80:\n    print("B")\n'
     'elif score >= 70:\n    print("C")\nelse:\n    print("F")',
     ["95", "72", "40"], ("score >= 70", "score >= 75")),
    ("ex09", "Leap year", ["Conditionals"],
     "Read a year and print `leap` if it is a leap year, otherwise `common`.",
     'y = int(input())\nif (y % 4 == 0 and y % 100 != 0) or y % 400 == 0:\n    print("leap")\n'
     'else:\n    print("common")',
     ["2024", "1900", "2000"], ("y % 400 == 0", "y % 200 == 0")),
    ("ex10", "Absolute value", ["Conditionals"],
     "Read an integer and print its absolute value without using abs().",
     "n = int(input())\nif n < 0:\n    n = -n\nprint(n)",
     ["-7", "3"], ("if n < 0:", "if n < -7:")),
    ("ex11", "Sum from 1 to n", ["Loops"],
     "Read n and print 1 + 2 + ... + n using a loop.",
     "n = int(input())\ntotal = 0\nfor i in range(1, n + 1):\n    total += i\nprint(total)",
     ["10", "3"], ("range(1, n + 1)", "range(1, n)")),
    ("ex12", "Factorial", ["Loops"],
     "Read n and print n! computed with a loop.",
     "n = int(input())\nresult = 1\nfor i in range(2, n + 1):\n    result *= i\nprint(result)",
     ["5", "0"], ("result = 1", "result = 2")),
    ("ex13", "Multiplication table", ["Loops"],
     "Read n and print the lines `n x i = n*i` for i from 1 to 9.",
     'n = int(input())\nfor i in range(1, 10):\n    print(n, "x", i, "=", n * i)',
     ["3", "7"], ("range(1, 10)", "range(1, 9)")),
    ("ex14", "Countdown", ["Loops"],
     "Read n, print n down to 1 one per line, then print `Liftoff!`.",
     'n = int(input())\nwhile n > 0:\n    print(n)\n    n -= 1\nprint("Liftoff!")',
     ["3", "5"], ("while n > 0:", "while n > 1:")),
    ("ex15", "Star triangle", ["Loops"],
     "Read n and print a right triangle of `*` with n rows.",
     'n = int(input())\nfor i in range(1, n + 1):\n    print("*" * i)',
     ["3", "4"], ('"*" * i', '"*" * (i + 1)')),
    ("ex16", "Digit sum", ["Loops"],
     "Read a non-negative integer and print the sum of its digits.",
     "n = input()\ntotal = 0\nfor ch in n:\n    total += int(ch)\nprint(total)",
     ["1234", "909"], ("total = 0", "total = 1")),
    ("ex17", "Reverse a string", ["Strings"],
     "Read a line and print it reversed.",
     "s = input()\nprint(s[::-1])",
     ["hello", "Python"], ("s[::-1]", "s[:0:-1]")),
    ("ex18", "Count vowels", ["Strings"],
     "Read a line and print how many vowels (a, e, i, o, u in any case) it contains.",
     's = input()\ncount = 0\nfor ch in s.lower():\n    if ch in "aeiou":\n        count += 1\nprint(count)',
     ["Programming", "AEIOU xyz"], ("s.lower()", "s")),
    ("ex19", "Palindrome", ["Strings"],
     "Read a word and print `yes` if it reads the same backwards, otherwise `no`.",
     's = input()\nif s == s[::-1]:\n    print("yes")\nelse:\n    print("no")',
     ["level", "tutor"], ("s == s[::-1]", "s == s[1:][::-1]")),
    ("ex20", "Word count", ["Strings"],
     "Read a line and print the number of words in it.",
     "line = input()\nprint(len(line.split()))",
     ["the quick brown fox", "hello"], ("len(line.split())", 'line.count(" ")')),
    ("ex21", "Sum and average", ["Lists"],
     "Read integers on one line and print their sum and average separated by a space.",
     "nums = list(map(int, input().split()))\nprint(sum(nums), sum(nums) / len(nums))",
     ["1 2 3 4", "10 20"], ("sum(nums) / len(nums)", "sum(nums) // len(nums)")),
    ("ex22", "Largest element", ["Lists"],
     "Read integers on one line and print the largest without using max().",
     "nums = list(map(int, input().split()))\nbest = nums[0]\nfor x in nums:\n    if x > best:\n"
     "        best = x\nprint(best)",
     ["3 9 2", "-5 -1 -8"], ("best = nums[0]", "best = 0")),
    ("ex23", "Keep the even numbers", ["Lists"],
     "Read integers on one line and print the list of the even ones.",
     "nums = list(map(int, input().split()))\nevens = [x for x in nums if x % 2 == 0]\nprint(evens)",
     ["1 2 3 4 5 6", "7 9"], ("x % 2 == 0", "x % 3 == 0")),
    ("ex24", "Square function", ["Functions"],
     "Write a function square(x) and use it to print the square of an integer read from input.",
     "def square(x):\n    return x * x\n\n\nn = int(input())\nprint(square(n))",
     ["4", "-3"], ("x * x", "x * 2")),
    ("ex25", "Prime check", ["Functions"],
     "Write is_prime(n) and print its result for an integer read from input.",
     "def is_prime(n):\n    if n < 2:\n        return False\n    for d in range(2, n):\n        if n % d == 0:\n"
     "            return False\n    return True\n\n\nprint(is_prime(int(input())))",
     ["7", "12", "1"], ("range(2, n)", "range(3, n)")),
    ("ex26", "Greatest common divisor", ["Functions"],
     "Read two positive integers on one line and print their greatest common divisor using Euclid's algorithm.",
     "a, b = map(int, input().split())\nwhile b != 0:\n    a, b = b, a % b\nprint(a)",
     ["12 18", "7 5"], ("print(a)", "print(a * 2)")),
    ("ex27", "Fibonacci numbers", ["Loops"],
     "Read n and print the first n Fibonacci numbers, one per line, starting from 0.",
     "n = int(input())\na, b = 0, 1\nfor _ in range(n):\n    print(a)\n    a, b = b, a + b",
     ["5", "1", "8"], None),
]

UNNECESSARY = [
    "import math\n\n{sol}",
    "{sol}\nsteps = []\nfor k in range(3):\n    steps.append(k)",
    "debug = True\n{sol}\nif debug:\n    pass",
]

# Per type: how many records the judge accepts (the rest are failures).
ACCEPTED = {"HardCoding": 4, "UnnecessaryCode": 6, "RequirementNotMet": 4, "ComputationError": 4}

JUDGE_MARKER = "## Correctness check"
RNP_MARKER = "Answer with exactly one word: yes or no."
RCG_MARKER = "## Restriction"

REASONS = {
    "HardCoding": "The expected output is printed as a literal instead of being computed from the input.",
    "UnnecessaryCode": "The program contains statements that do not contribute to the result.",
    "RequirementNotMet": "The program does not read the input as the exercise requires.",
    "ComputationError": "The value printed is computed incorrectly for some inputs.",
}


def run(solution, stdin):
    out = subprocess.run([sys.executable, "-c", solution], input=stdin + "\n", capture_output=True,
                         text=True, timeout=10, check=True)
    return out.stdout.rstrip("\n")


def build_exercises():
    exercises = []
    for ex_id, title, path, desc, sol, inputs, mutation in EXERCISES:
        outputs = [run(sol, i) for i in inputs]
        if mutation is not None:
            assert sol.count(mutation[0]) == 1, (ex_id, mutation)
        exercises.append({
            "id": ex_id, "title": title, "description": desc, "input_examples": inputs,
            "output_examples": outputs, "solution": sol, "category_path": path,
        })
    return exercises


def hard_coded(ex):
    # Branches on the first input line and prints the stored example output.
    lines = ["data = input()"]
    for k, (given, expected) in enumerate(zip(ex["input_examples"], ex["output_examples"])):
        lines.append(f"{'if' if k == 0 else 'elif'} data == {given.split(chr(10))[0]!r}:")
        lines += [f"    print({out!r})" for out in expected.split("\n")]
    return "\n".join(lines)


def ignores_input(ex, k):
    literal = ex["input_examples"][k].split("\n")[0]
    return ex["solution"].replace("input()", repr(literal), 1)


def submissions(exercises):
    """Four labeled submissions per exercise: 27 HC, 25 UC, 30 RNM, 26 CE."""
    out = []
    for idx, ex in enumerate(exercises):
        out.append((ex, "HardCoding", hard_coded(ex)))
        if idx < 25:
            slots = ["UnnecessaryCode", "ComputationError", "RequirementNotMet"]
        elif idx == 25:
            slots = ["ComputationError", "RequirementNotMet", "RequirementNotMet"]
        else:
            slots = ["RequirementNotMet"] * 3
        rnm = 0
        for slot in slots:
            if slot == "UnnecessaryCode":
                code = UNNECESSARY[idx % len(UNNECESSARY)].format(sol=ex["solution"])
            elif slot == "ComputationError":
                old, new = EXERCISES[idx][6]
                code = ex["solution"].replace(old, new)
            else:
                code = ignores_input(ex, rnm)
                rnm += 1
            out.append((ex, slot, code))
    return out


def record(ex, error_type, code, n):
    total = 20 + (n * 7) % 31
    solved = (n * 5) % (total + 1)
    rec = {
        "ex_id": ex["id"], "title": ex["title"], "desc": ex["description"], "solution": ex["solution"],
        "sub_code": code, "solved_subs": solved, "total_subs": total, "accuracy": solved / total,
    }
    if error_type is not None:
        rec["error_type"] = error_type
    return rec


def check_unique(exercises, subs):
    # A submission must not occur inside any other prompt, otherwise the
    # mock's substring rules become ambiguous.
    texts = [ex[k] for ex in exercises for k in ("description", "solution")]
    texts += [s for ex in exercises for s in ex["input_examples"] + ex["output_examples"]]
    codes = [c for _, _, c in subs]
    for i, code in enumerate(codes):
        compile(code, f"record {i}", "exec")
        for j, other in enumerate(codes):
            assert i == j or code not in other, (i, j)
        for t in texts:
            assert code not in t, (i, code)


def judge_mock(subs):
    rules = []
    seen = {t: 0 for t in ACCEPTED}
    totals = {t: sum(1 for _, s, _ in subs if s == t) for t in ACCEPTED}
    for ex, error_type, code in subs:
        seen[error_type] += 1
        accepted = seen[error_type] > totals[error_type] - ACCEPTED[error_type]
        text = ("VERDICT: CORRECT\nThe program prints the expected output." if accepted else
                f"VERDICT: WRONG\nTYPE: {error_type}\n{REASONS[error_type]}")
        rules.append({"contains": [JUDGE_MARKER, code], "text": text, "input_tokens": 600, "output_tokens": 30})
    return {"rules": rules}


def bench_mock():
    review = ("Nice start. Check how you read the input.\n\n### Code to fix\n"
              "- line 1: make sure the value you read is converted before use")
    rules = []
    for cap, rnp_in, rcg_in, rcg_out in ((1024, 420, 980, 350), (512, 400, 940, 220)):
        rules.append({"contains": RNP_MARKER, "max_output_tokens": cap,
                      "text": "yes", "input_tokens": rnp_in, "output_tokens": 2})
        rules.append({"contains": RCG_MARKER, "max_output_tokens": cap,
                      "text": review, "input_tokens": rcg_in, "output_tokens": rcg_out})
    return {"latency": {"base_ms": 50, "per_max_output_token_ms": 0.5}, "rules": rules}


def demo_mock():
    review = ("Good effort! Your program reads the input correctly. Think about whether every line is "
              "needed to produce the answer.\n\n### Code to fix\n- line 1: check that this line is really needed")
    return {
        "rules": [
            {"contains": RNP_MARKER, "text": "yes"},
            {"contains": RCG_MARKER, "text": review},
            {"contains": JUDGE_MARKER, "text": "VERDICT: CORRECT\nThe program prints the expected output."},
        ],
        "default": "VERDICT: ERROR",
    }


def dump(path, doc):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(doc, indent=2, ensure_ascii=False) + "\n")


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--root", default=str(Path(__file__).resolve().parent.parent))
    root = Path(parser.parse_args().root)

    exercises = build_exercises()
    subs = submissions(exercises)
    check_unique(exercises, subs)
    labeled = [record(ex, t, c, n) for n, (ex, t, c) in enumerate(subs)]

    dump(root / "tests/fixtures/eval108.json", {"exercises": exercises, "records": labeled})
    dump(root / "tests/fixtures/eval108_judge_mock.json", judge_mock(subs))
    dump(root / "tests/fixtures/bench_mock.json", bench_mock())
    # The deployable bank keeps the first 93 submissions.
    dump(root / "data/bank.json", {"exercises": exercises, "records": labeled[:93]})
    dump(root / "data/mock/demo.json", demo_mock())
    dump(root / "data/pricing.json", {
        "gpt-4": {"input_usd_per_1k": 0.03, "output_usd_per_1k": 0.06},
        "gpt-4-32k": {"input_usd_per_1k": 0.06, "output_usd_per_1k": 0.12},
    })
    print(f"{len(exercises)} exercises, {len(labeled)} labeled records")


if __name__ == "__main__":
    main()
