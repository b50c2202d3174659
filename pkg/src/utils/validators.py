import json
import logging
import os
from typing import Optional

logger = logging.getLogger('MCPeakPower')


def validate_json_file(file_path: str, schema: Optional[str] = None) -> bool:
    """
    Validate that the given file exists and holds a JSON document,
    optionally carrying the expected ``schema`` tag.
    """
    if not file_path or not os.path.exists(file_path):
        logger.error(f"File Error: {file_path} does not exist.")
        return False

    try:
        with open(file_path, 'r', encoding='utf-8') as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as e:
        logger.error(f"File Error: cannot read {file_path}: {str(e)}")
        return False

    if not isinstance(doc, dict) or not doc:
        logger.error(f"File Error: {file_path} is empty.")
        return False

    if schema is not None and doc.get('schema') != schema:
        logger.error(f"File Error: {file_path} has schema {doc.get('schema')!r}, expected {schema!r}.")
        return False

    return True


def validate_output_dir(path: str) -> bool:
    """Output directory exists or can be created."""
    try:
        os.makedirs(path, exist_ok=True)
    except OSError as e:
        logger.error(f"Output Error: cannot create {path}: {str(e)}")
        return False
    return os.access(path, os.W_OK)
