import json
import os

CONFIG_PATH = os.path.join(os.path.dirname(os.path.dirname(__file__)), "config.json")


def load_config(path: str = CONFIG_PATH) -> dict:
    """
    Loads the configuration file (config.json) and returns the settings as a dictionary.

    Parameters:
    -----------
    path : str, optional
        Location of the JSON file. Defaults to the `config.json` next to the repository root.

    Returns:
    -------
    dict:
        Dictionary containing the numerical defaults of every service.

    Raises:
    ------
    FileNotFoundError:
        If the config.json file is missing.
    ValueError:
        If the JSON file contains invalid formatting.
    """
    try:
        with open(path, "r") as file:
            return json.load(file)
    except FileNotFoundError:
        raise FileNotFoundError(f"Configuration file not found: {path}")
    except json.JSONDecodeError:
        raise ValueError(f"Invalid JSON format in {path}")


def section(name: str) -> dict:
    """Returns one section of the loaded configuration, or an empty dict when absent."""
    return CONFIG.get(name, {})


# Load config at module level for quick access
CONFIG = load_config()
