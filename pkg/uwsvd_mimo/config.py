import os
from dotenv import load_dotenv

# Load environment variables from the .env file
load_dotenv()


def _get_env_int(name, default):
    val = os.getenv(name)
    if val is None:
        return default
    try:
        # Strip quotes and whitespace that might be present when values are passed
        cleaned = val.strip().strip('\"').strip("\'")
        return int(cleaned)
    except Exception:
        return default


# Result files with relative --out paths land here
working_dir_env = os.getenv("UWSVD_WORKING_DIR")
WORKING_DIR = os.path.abspath(working_dir_env) if working_dir_env else os.getcwd()

LOG_LEVEL = os.getenv("UWSVD_LOG_LEVEL", "INFO").strip().upper()
WORKERS = _get_env_int("UWSVD_WORKERS", 1)  # Threads used for Monte Carlo trials
TRIALS = _get_env_int("UWSVD_TRIALS", 500)  # Default trial count per experiment
SEED = _get_env_int("UWSVD_SEED", 0)  # Default master seed
