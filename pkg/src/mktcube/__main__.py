"""Run the market cube command-line interface."""
from .app import run


if __name__ == "__main__":  # pragma: no cover - manual execution only
    run()
