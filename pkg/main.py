"""
Active Inference Control Toolkit
Estimation, control and hyperparameter learning by free-energy gradient descent.
"""

import sys

from cli.app import run_app


def main():
    """Main entry point."""
    sys.exit(run_app())


if __name__ == "__main__":
    main()
