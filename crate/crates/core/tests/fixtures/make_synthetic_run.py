"""Writes synthetic_run.jsonl: a 1+1 chain, a 4+20 population run and a
parentless random-search run."""

import json
import random
from pathlib import Path

rng = random.Random(7)


def program(name, params, loops, branches, helpers):
    args = ", ".join(["budget"] + [f"p{i}" for i in range(params - 1)])
    lines = ["import numpy as np", "", ""]
    for h in range(helpers):
        lines += [f"def helper_{h}(x):", f"    return np.clip(x * {h + 2}, -5, 5)", "", ""]
    lines += [f"class {name}:", f"    def __call__(self, {args}):"]
    lines += ["        x = np.random.uniform(-5, 5, 5)", "        best = float('inf')"]
    for i in range(loops):
        lines.append(f"        for i{i} in range(budget // {i + 2}):")
        lines.append(f"            y = x + np.random.normal(0, {0.1 * (i + 1):.1f}, 5)")
        for b in range(branches):
            kw = "if" if b == 0 else "elif"
            lines.append(f"            {kw} y.sum() > {b}:")
            lines.append(f"                x = y * {b + 1}")
        if branches:
            lines.append("            else:")
            lines.append("                best = min(best, y.sum())")
    lines.append("        return best")
    return "\n".join(lines) + "\n"


def sample(sid, run_id, method, llm, benchmark, idx, parents, fitness, code):
    return {
        "id": sid,
        "name": sid.split("/")[-1],
        "run_id": run_id,
        "method": method,
        "llm": llm,
        "benchmark": benchmark,
        "evaluation_index": idx,
        "parent_ids": parents,
        "fitness_raw": fitness,
        "code": code,
    }


rows = []

# 1+1 chain: the parameter count strictly decreases as fitness rank rises.
n = 12
fitness = sorted(rng.sample(range(100, 1000), n))
order = list(range(n))
rng.shuffle(order)
for idx in range(n):
    rank = order[idx]
    code = program(f"Chain{idx}", 2 + (n - rank), rng.randint(1, 3), rng.randint(0, 3), 0)
    parents = [f"chain/{idx - 1}"] if idx else []
    rows.append(sample(f"chain/{idx}", "run-0", "LLaMEA", "gpt-4o", "BBOB", idx, parents, fitness[rank] / 1000, code))

# 4+20: four initial programs, two generations of twenty offspring.
population = []
for idx in range(4):
    sid = f"eoh/{idx}"
    f = rng.uniform(0.2, 0.6)
    rows.append(sample(sid, "run-0", "EoH", "gpt-4o", "BBOB", idx,
                       [], f, program(f"Init{idx}", rng.randint(1, 4), rng.randint(1, 3), rng.randint(0, 2), 0)))
    population.append((f, sid))
idx = 4
for gen in range(2):
    offspring = []
    for _ in range(20):
        parent = rng.choice(population)[1]
        sid = f"eoh/{idx}"
        f = None if rng.random() < 0.15 else rng.uniform(0.2, 0.95)
        code = program(f"Gen{gen}x{idx}", rng.randint(1, 5), rng.randint(1, 4), rng.randint(0, 3), rng.randint(0, 2))
        rows.append(sample(sid, "run-0", "EoH", "gpt-4o", "BBOB", idx, [parent], f, code))
        if f is not None:
            offspring.append((f, sid))
        idx += 1
    population = sorted(population + offspring, reverse=True)[:4]

# Random search: independent samples without lineage.
for idx in range(10):
    code = program(f"Random{idx}", rng.randint(1, 5), rng.randint(1, 4), rng.randint(0, 3), rng.randint(0, 2))
    rows.append(sample(f"rs/{idx}", "run-0", "RandomSearch", "gpt-4o", "BBOB", idx, [], rng.uniform(0.1, 0.9), code))

out = Path(__file__).with_name("synthetic_run.jsonl")
out.write_text("".join(json.dumps(r) + "\n" for r in rows))
