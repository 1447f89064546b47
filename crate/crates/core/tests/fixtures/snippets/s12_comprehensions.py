def stats(xs, ys=None):
    evens = [x for x in xs if x % 2 == 0 if x > 0]
    pairs = {x: y for x in xs for y in (ys or []) if x < y}
    uniq = {abs(x) for x in xs}
    total = sum(x * x for x in xs)
    best = max(xs, key=lambda v: -v if v < 0 else v)
    return evens, pairs, uniq, total, best
