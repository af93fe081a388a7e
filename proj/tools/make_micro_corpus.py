#!/usr/bin/env python3
# Copyright 2026 The cdp Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#      http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""Regenerates data/micro: a 12-requirement corpus plus stub fixtures.

Every requirement gets 16 recorded completions (plus 16 spare for re-asks) with
a fixed number of correct ones. Four requirements have no correct completion;
three of those recover after the requirement is rewritten.
"""

import json
import pathlib
import sys

N = 16


def fenced(code):
    return "Here is my solution.\n\n```python\n" + code.strip("\n") + "\n```\n"


def stdin_tests(pairs):
    return [{"test_id": f"t{i}", "mode": "stdin_stdout", "input_text": inp, "expected_output": out}
            for i, (inp, out) in enumerate(pairs)]


def assert_tests(snippets):
    return [{"test_id": f"t{i}", "mode": "assertion", "assertion_snippet": s}
            for i, s in enumerate(snippets)]


# id, text, difficulty, reference, tests, wrong variants, correct count,
# optimized correct count (None when never rewritten).
PROBLEMS = [
    dict(
        id="micro-001",
        text="Read two integers separated by a space from standard input and print their sum.",
        difficulty="introductory",
        ref="a, b = map(int, input().split())\nprint(a + b)\n",
        tests=stdin_tests([("1 2\n", "3\n"), ("-5 5\n", "0\n"), ("1000000 2345678\n", "3345678\n")]),
        wrong=["a, b = map(int, input().split())\nprint(a - b)\n",
               "a, b = input().split()\nprint(a + b)\n"],
        correct=15,
    ),
    dict(
        id="micro-002",
        text="Read one line from standard input and print it reversed.",
        difficulty="introductory",
        ref="print(input()[::-1])\n",
        tests=stdin_tests([("abc\n", "cba\n"), ("racecar\n", "racecar\n"), ("hello world\n", "dlrow olleh\n")]),
        wrong=["s = input()\nprint(s)\n", "print(input()[::-1][1:])\n"],
        correct=12,
    ),
    dict(
        id="micro-003",
        text=("Read an integer n and print the numbers 1..n, one per line, replacing multiples of 3 with "
              "Fizz, multiples of 5 with Buzz and multiples of both with FizzBuzz."),
        difficulty="introductory",
        ref=("n = int(input())\nfor i in range(1, n + 1):\n"
             "    print('FizzBuzz' if i % 15 == 0 else 'Fizz' if i % 3 == 0 else 'Buzz' if i % 5 == 0 else i)\n"),
        tests=stdin_tests([("5\n", "1\n2\nFizz\n4\nBuzz\n"),
                           ("15\n", "1\n2\nFizz\n4\nBuzz\nFizz\n7\n8\nFizz\nBuzz\n11\nFizz\n13\n14\nFizzBuzz\n")]),
        wrong=[("n = int(input())\nfor i in range(1, n + 1):\n"
                "    print('Fizz' if i % 3 == 0 else 'Buzz' if i % 5 == 0 else i)\n"),
               "n = int(input())\nfor i in range(n):\n    print(i)\n"],
        correct=9,
    ),
    dict(
        id="micro-004",
        text="Write a function is_palindrome(s) that returns True when s reads the same forwards and backwards.",
        difficulty="introductory",
        ref="def is_palindrome(s):\n    return s == s[::-1]\n",
        tests=assert_tests(["assert is_palindrome('abba')", "assert not is_palindrome('abc')",
                            "assert is_palindrome('')"]),
        wrong=["def is_palindrome(s):\n    return s[0] == s[-1]\n",
               "def is_palindrome(s):\n    return len(s) % 2 == 0\n"],
        correct=11,
    ),
    dict(
        id="micro-005",
        text="Write a function count_vowels(s) returning how many characters of s are vowels (aeiou, any case).",
        difficulty="introductory",
        ref="def count_vowels(s):\n    return sum(c in 'aeiouAEIOU' for c in s)\n",
        tests=assert_tests(["assert count_vowels('Hello') == 2", "assert count_vowels('xyz') == 0",
                            "assert count_vowels('AEIOU aeiou') == 10"]),
        wrong=["def count_vowels(s):\n    return sum(c in 'aeiou' for c in s)\n",
               "def count_vowels(s):\n    return len(s)\n"],
        correct=6,
    ),
    dict(
        id="micro-006",
        text=("Read n and then n integers on the next line. Print the largest sum of a contiguous, "
              "non-empty subarray."),
        difficulty="interview",
        ref=("n = int(input())\na = list(map(int, input().split()))\nbest = cur = a[0]\n"
             "for x in a[1:]:\n    cur = max(x, cur + x)\n    best = max(best, cur)\nprint(best)\n"),
        tests=stdin_tests([("5\n1 -2 3 4 -1\n", "7\n"), ("3\n-3 -1 -2\n", "-1\n"), ("1\n5\n", "5\n")]),
        # Everyone forgets the all-negative case, even after the rewrite.
        wrong=[("n = int(input())\na = list(map(int, input().split()))\nbest = cur = 0\n"
                "for x in a:\n    cur = max(0, cur + x)\n    best = max(best, cur)\nprint(best)\n"),
               "n = int(input())\nprint(sum(map(int, input().split())))\n"],
        correct=0,
        optimized=0,
    ),
    dict(
        id="micro-007",
        text="Write a function gcd(a, b) returning the greatest common divisor of two non-negative integers.",
        difficulty="introductory",
        ref="def gcd(a, b):\n    while b:\n        a, b = b, a % b\n    return a\n",
        tests=assert_tests(["assert gcd(12, 18) == 6", "assert gcd(7, 0) == 7", "assert gcd(17, 5) == 1"]),
        wrong=["def gcd(a, b):\n    return min(a, b)\n",
               "def gcd(a, b):\n    return gcd(b, a % b)\n"],
        correct=14,
    ),
    dict(
        id="micro-008",
        text="Print the most frequent word of the input.",
        difficulty="interview",
        ref=("import sys\nfrom collections import Counter\nc = Counter(sys.stdin.read().split())\n"
             "top = max(c.values())\nprint(min(w for w, k in c.items() if k == top))\n"),
        tests=stdin_tests([("b a b a c\n", "a\n"), ("x y z\n", "x\n"), ("q q p\n", "q\n")]),
        wrong=[("import sys\nfrom collections import Counter\n"
                "print(Counter(sys.stdin.read().split()).most_common(1)[0][0])\n"),
               "print(input().split()[0])\n"],
        correct=0,
        optimized=7,
        rewrite=dict(
            explanation="Read all words from standard input and print the word that occurs most often.",
            concepts="Counting with a dictionary; breaking ties deterministically.",
            inputs="Whitespace separated lowercase words, possibly over several lines; at least one word.",
            outputs="One word. When several words share the highest count, print the lexicographically smallest.",
            pseudo="count each word\ntop = highest count\nprint min(word with count == top)",
        ),
    ),
    dict(
        id="micro-009",
        text="Write a function balanced(s) that tells whether the brackets ()[]{} in s are balanced.",
        difficulty="interview",
        ref=("def balanced(s):\n    pairs = {')': '(', ']': '[', '}': '{'}\n    stack = []\n"
             "    for c in s:\n        if c in '([{':\n            stack.append(c)\n"
             "        elif c in pairs:\n            if not stack or stack.pop() != pairs[c]:\n"
             "                return False\n    return not stack\n"),
        tests=assert_tests(["assert balanced('([]{})')", "assert not balanced('(]')",
                            "assert not balanced('((')", "assert balanced('a(b)c')"]),
        wrong=["def balanced(s):\n    return s.count('(') == s.count(')')\n",
               "def balanced(s):\n    raise NotImplementedError\n"],
        correct=4,
    ),
    dict(
        id="micro-010",
        text="Read n and print the n-th prime number (the first prime is 2).",
        difficulty="interview",
        ref=("n = int(input())\nc, k = 0, 1\nwhile c < n:\n    k += 1\n"
             "    if all(k % d for d in range(2, int(k ** 0.5) + 1)):\n        c += 1\nprint(k)\n"),
        tests=stdin_tests([("1\n", "2\n"), ("5\n", "11\n"), ("100\n", "541\n")]),
        wrong=[("n = int(input())\nc, k = 0, 1\nwhile c < n:\n    k += 1\n"
                "    if all(k % d for d in range(2, k // 2)):\n        c += 1\nprint(k)\n"),
               "n = int(input())\nprint([2, 3, 5][n])\n"],
        correct=3,
        hang=True,
    ),
    dict(
        id="micro-011",
        text="Write a function rle(s) that run-length encodes s.",
        difficulty="interview",
        ref=("def rle(s):\n    out = []\n    i = 0\n    while i < len(s):\n        j = i\n"
             "        while j < len(s) and s[j] == s[i]:\n            j += 1\n"
             "        out.append(f'{j - i}{s[i]}')\n        i = j\n    return ''.join(out)\n"),
        tests=assert_tests(["assert rle('aaabcc') == '3a1b2c'", "assert rle('') == ''",
                            "assert rle('z') == '1z'"]),
        wrong=[("def rle(s):\n    out = ''\n    i = 0\n    while i < len(s):\n        j = i\n"
                "        while j < len(s) and s[j] == s[i]:\n            j += 1\n"
                "        out += s[i] + (str(j - i) if j - i > 1 else '')\n        i = j\n    return out\n"),
               "def rle(s):\n    return s\n"],
        correct=0,
        optimized=9,
        rewrite=dict(
            explanation="Replace every maximal run of equal characters by its length followed by the character.",
            concepts="Scanning runs with two indices; string building.",
            inputs="s is a string of printable characters, possibly empty.",
            outputs="A string; runs of length 1 are written as '1c'. The empty string encodes to ''.",
            pseudo="i = 0\nwhile i < len(s): find run end j; emit str(j - i) + s[i]; i = j",
        ),
    ),
    dict(
        id="micro-012",
        text="Read a matrix and print its transpose.",
        difficulty="competition",
        ref=("r, c = map(int, input().split())\nm = [input().split() for _ in range(r)]\n"
             "for j in range(c):\n    print(' '.join(m[i][j] for i in range(r)))\n"),
        tests=stdin_tests([("2 3\n1 2 3\n4 5 6\n", "1 4\n2 5\n3 6\n"), ("1 1\n7\n", "7\n")]),
        wrong=[("import sys\nrows = [l.split() for l in sys.stdin.read().splitlines()]\n"
                "for row in zip(*rows):\n    print(' '.join(row))\n"),
               "m = [input().split() for _ in range(2)]\nprint(m)\n"],
        correct=0,
        optimized=2,
        rewrite=dict(
            explanation="Print the transpose of an r x c matrix of integers.",
            concepts="Nested indexing; row and column swap.",
            inputs="First line: r and c. Then r lines with c integers each.",
            outputs="c lines with r space separated integers; line j holds column j of the input.",
            pseudo="read r, c and the rows\nfor j in 0..c-1: print the j-th entry of every row",
        ),
    ),
]


def completions(correct_code, wrong, n_correct, salt):
    # Deterministic interleaving so correct samples are not all at the front.
    order = sorted(range(N), key=lambda i: (i * 7 + salt) % N)
    good = set(order[:n_correct])
    out = []
    for i in range(N):
        if i in good:
            out.append(fenced(correct_code) if i % 3 else correct_code)
        elif i % 5 == 4:
            out.append(fenced("this is not python at all"))
        else:
            out.append(fenced(wrong[i % len(wrong)]))
    return out


def sections(r):
    return (f"### Requirement Explanation\n{r['explanation']}\n\n### Key Concepts\n{r['concepts']}\n\n"
            f"### Input Constraints\n{r['inputs']}\n\n### Output Constraints\n{r['outputs']}\n\n"
            f"### Pseudocode\n{r['pseudo']}\n")


def write_lines(path, items):
    path.write_text("".join(json.dumps(x) + "\n" for x in items))


def main(root):
    root = pathlib.Path(root)
    fixtures = root / "fixtures"
    fixtures.mkdir(parents=True, exist_ok=True)
    for old in fixtures.glob("*.completions"):
        old.unlink()

    records = []
    for salt, p in enumerate(PROBLEMS):
        records.append({"requirement_id": p["id"], "requirement_text": p["text"],
                        "reference_solution": p["ref"], "manual_difficulty": p["difficulty"],
                        "tests": p["tests"]})
        first = completions(p["ref"], p["wrong"], p["correct"], salt)
        spare = completions(p["ref"], p["wrong"], p["correct"], salt + 5)
        if p.get("hang"):
            bad = next(i for i, c in enumerate(first) if p["ref"].strip() not in c)
            first[bad] = fenced("while True:\n    pass\n")
        write_lines(fixtures / f"{p['id']}.completions", first + spare)
        if "optimized" not in p:
            continue
        rw = p.get("rewrite") or dict(
            explanation=p["text"], concepts="Kadane's algorithm.",
            inputs="n >= 1 integers.", outputs="One integer.",
            pseudo="best = cur = a[0]\nfor x in a[1:]: cur = max(x, cur + x); best = max(best, cur)")
        # First reply lacks the sections, so the agent is asked again.
        write_lines(fixtures / f"{p['id']}.optimize.completions",
                    ["I think the requirement is fine as it is.", sections(rw)])
        if "rewrite" in p:
            revised = dict(rw, outputs=rw["outputs"] + " Print a trailing newline.")
            revise = ["ISSUES: ambiguity, incompleteness\n\n" + sections(revised)]
        else:
            revise = ["ISSUES: none"]
        write_lines(fixtures / f"{p['id']}.revise.completions", revise)
        write_lines(fixtures / f"{p['id']}.optimized.completions",
                    completions(p["ref"], p["wrong"], p["optimized"], salt + 11))
    write_lines(root / "corpus.jsonl", records)


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else pathlib.Path(__file__).resolve().parent.parent / "data" / "micro")
