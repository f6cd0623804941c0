"""
Utility functions for the bilinear hull toolkit.
Contains exact rational parsing/formatting helpers and progress tracking.
"""

import sys
import threading
import time
from fractions import Fraction
from typing import Iterable, List, Union

RationalLike = Union[int, str, Fraction]


def parse_rational(text: RationalLike) -> Fraction:
    """
    Parse an exact rational from an integer, a decimal literal or a fraction.

    Decimal literals are read exactly ("0.1" is 1/10, not the nearest double).

    Args:
        text: Something like "3", "-0.25", "7/8" or an existing Fraction.

    Returns:
        Fraction: The exact value.

    Raises:
        ValueError: If the text is not a rational literal.
    """
    if isinstance(text, Fraction):
        return text
    if isinstance(text, bool):
        raise ValueError(f"Not a rational literal: {text!r}")
    if isinstance(text, int):
        return Fraction(text)
    if isinstance(text, float):
        raise ValueError("Floats are not accepted; pass a decimal string instead")
    cleaned = str(text).strip()
    if not cleaned:
        raise ValueError("Empty rational literal")
    try:
        return Fraction(cleaned)
    except (ValueError, ZeroDivisionError) as e:
        raise ValueError(f"Not a rational literal: {text!r}") from e


def parse_rational_list(text: str) -> List[Fraction]:
    """
    Parse a whitespace or comma separated list of rationals.

    Args:
        text (str): For example "0.6 0.3 1/3".

    Returns:
        List[Fraction]: The parsed values.
    """
    return [parse_rational(token) for token in text.replace(",", " ").split()]


def format_rational(value: Fraction) -> str:
    """
    Format a rational as "p/q", or "p" when it is an integer.

    Args:
        value (Fraction): The value to format.

    Returns:
        str: Its exact textual form.
    """
    value = Fraction(value)
    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"


def format_vector(values: Iterable[Fraction]) -> str:
    """Format a vector of rationals as a space separated string."""
    return " ".join(format_rational(v) for v in values)


def is_terminating(value: Fraction) -> bool:
    """
    Check whether a rational has a finite decimal expansion.

    Args:
        value (Fraction): The value to check.

    Returns:
        bool: True if the denominator only has the prime factors 2 and 5.
    """
    q = Fraction(value).denominator
    for p in (2, 5):
        while q % p == 0:
            q //= p
    return q == 1


def format_time(seconds: float) -> str:
    """
    Format time in minutes and seconds.

    Args:
        seconds (float): Time in seconds.

    Returns:
        str: Formatted time string in the format "Xm:Ys".
    """
    minutes = int(seconds // 60)
    remaining_seconds = int(seconds % 60)
    return f"{minutes}m:{remaining_seconds}s"


class ProgressBar:
    """
    A progress line with a completion counter and elapsed time.

    Attributes:
        total (int): Number of work items.
        width (int): The width of the bar in characters.
        done (int): Items completed so far.
        stop_event (threading.Event): Event to control the redraw thread.
        start_time (float): The time when the progress bar started.
    """

    def __init__(self, total: int, width: int = 30, stream=None):
        """
        Initialize the progress bar.

        Args:
            total (int): Number of work items.
            width (int): The width of the progress bar in characters.
            stream: Output stream, stderr by default.
        """
        self.total = max(1, total)
        self.width = width
        self.done = 0
        self.stream = stream if stream is not None else sys.stderr
        self.stop_event = threading.Event()
        self.start_time = time.time()
        self._lock = threading.Lock()
        self.thread = None

    def advance(self, count: int = 1) -> None:
        """Record completed work items."""
        with self._lock:
            self.done = min(self.total, self.done + count)

    def render(self) -> str:
        """Build the current progress line."""
        with self._lock:
            done = self.done
        filled = (self.width * done) // self.total
        bar = "#" * filled + "-" * (self.width - filled)
        elapsed_str = format_time(time.time() - self.start_time)
        return f"\rProcessing [{bar}] {done}/{self.total} {elapsed_str}"

    def animate(self) -> None:
        """Redraw the progress line until stopped."""
        while not self.stop_event.is_set():
            print(self.render(), end="", flush=True, file=self.stream)
            time.sleep(0.2)

    def start(self) -> None:
        """Start redrawing in a separate thread."""
        self.thread = threading.Thread(target=self.animate, daemon=True)
        self.thread.start()

    def stop(self) -> None:
        """Stop the redraw thread and clean up the display."""
        self.stop_event.set()
        if self.thread is not None:
            self.thread.join()
        print("\r" + " " * (self.width + 40) + "\r", end="", flush=True, file=self.stream)
