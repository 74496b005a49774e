"""Timer definitions: the four supported grammar forms and their due times.

Run with: python3 demos/timer_parsing.py
"""

from datetime import datetime, timezone

from chaintime import due_times, format_timer, parse_timer

EXAMPLES = [
    ("2020-12-24T12:00:00Z", "a fixed instant"),
    ("P7D", "a delay relative to enablement"),
    ("R/2020-01-01/P1M", "an absolutely anchored monthly cycle"),
    ("R7/PT24H", "seven daily repetitions from enablement"),
]

ENABLEMENT = 1_577_836_800_000  # 2020-01-01T00:00:00Z


def show(instant_ms: int) -> str:
    dt = datetime.fromtimestamp(instant_ms / 1_000, tz=timezone.utc)
    return dt.strftime("%Y-%m-%d %H:%M:%S UTC")


def main() -> None:
    print("Enablement instant:", show(ENABLEMENT))
    for text, meaning in EXAMPLES:
        spec = parse_timer(text)
        print(f"\n{text!r} ({meaning})")
        print(f"  parsed as {type(spec).__name__}, canonical form {format_timer(spec)}")
        for i, due in enumerate(due_times(spec, ENABLEMENT, limit=4)):
            print(f"  due[{i}] = {show(due)}")


if __name__ == "__main__":
    main()
