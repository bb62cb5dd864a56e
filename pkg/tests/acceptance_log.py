"""Collects one verdict per acceptance criterion for the end-of-run summary."""

RESULTS: dict[str, list[tuple[bool, str]]] = {}


def record(criterion: str, ok: bool, detail: str) -> bool:
    RESULTS.setdefault(criterion, []).append((bool(ok), detail))
    print(f"[{'PASS' if ok else 'FAIL'}] criterion {criterion}: {detail}")
    return ok


def summary_lines() -> list[str]:
    def key(c):
        return (int("".join(ch for ch in c if ch.isdigit())), c)

    lines = []
    for crit in sorted(RESULTS, key=key):
        parts = RESULTS[crit]
        ok = all(p[0] for p in parts)
        lines.append(f"{'PASS' if ok else 'FAIL'}  criterion {crit}: " + "; ".join(p[1] for p in parts))
    return lines
