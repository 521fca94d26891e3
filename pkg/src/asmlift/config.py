"""Configuration: env vars with defaults for lifting, validation and serving."""

import os
from pathlib import Path

from dotenv import load_dotenv

_ROOT = Path(__file__).resolve().parent.parent.parent
_CONFIG = Path(os.getenv("CONFIG_DIR", _ROOT / "config"))

# Explicit environment wins over the file.
load_dotenv(_CONFIG / "asmlift.env", override=False)

# --- Lifting ---
ASMLIFT_LEVEL = os.getenv("ASMLIFT_LEVEL", "O4")
ASMLIFT_BACKEND = os.getenv("ASMLIFT_BACKEND", "brute")

# --- Solver ---
SOLVER_CMD = os.getenv("SOLVER_CMD", "")
SOLVER_TIMEOUT_MS = int(os.getenv("SOLVER_TIMEOUT_MS", "10000"))

# --- Interpreter & fuzzing ---
INTERP_FUEL = int(os.getenv("INTERP_FUEL", str(1 << 20)))
FUZZ_ITERATIONS = int(os.getenv("FUZZ_ITERATIONS", "10000"))
FUZZ_SEED = int(os.getenv("FUZZ_SEED", "0"))
FUZZ_FUEL = int(os.getenv("FUZZ_FUEL", str(1 << 12)))

# --- Brute-force checker ---
BRUTE_WIDTH = int(os.getenv("BRUTE_WIDTH", "8"))
BRUTE_ENUM_CAP = int(os.getenv("BRUTE_ENUM_CAP", str(1 << 16)))
BRUTE_VECTOR_CAP = int(os.getenv("BRUTE_VECTOR_CAP", str(1 << 24)))
BRUTE_SAMPLES = int(os.getenv("BRUTE_SAMPLES", "4096"))

# --- Output ---
DUMP_DIR = os.getenv("DUMP_DIR", "")
OUTPUT_DIR = os.getenv("OUTPUT_DIR", "out")
CORPUS_DIR = os.getenv("CORPUS_DIR", str(_ROOT / "corpus"))

# --- Workers ---
WORKERS = int(os.getenv("WORKERS", "4"))

# --- API ---
API_HOST = os.getenv("API_HOST", "0.0.0.0")
API_PORT = int(os.getenv("API_PORT", "8100"))
