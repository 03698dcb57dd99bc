"""Outcome registry shared by the acceptance tests and the terminal summary hook."""

RESULTS: dict = {}


def report(criterion: int, passed: bool, detail: str) -> None:
    RESULTS[criterion] = (bool(passed), detail)
    print(f"criterion {criterion}: {'PASS' if passed else 'FAIL'} | {detail}")
