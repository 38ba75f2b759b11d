import csv
import json
import logging
import math
import os

from grainlab.geometry import Grain
from grainlab.geometry.shapes import shape_from_params

logger = logging.getLogger(__name__)

SUMMARY_FILE = "summary.json"
REALIZATIONS_FILE = "realizations.jsonl"


def format_value(value):
    """CSV cell text: 17 significant digits for floats, plain text otherwise."""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return format(value, ".17g")
    if value is None:
        return ""
    return str(value)


def _json_default(value):
    if hasattr(value, "tolist"):
        return value.tolist()
    raise TypeError(f"Object of type {type(value).__name__} is not JSON serializable")


class FileOperations:
    """Handles the artifact files a study run writes into its output directory."""

    def __init__(self, output_dir):
        self.output_dir = output_dir

    def path(self, file_name):
        return os.path.join(self.output_dir, file_name)

    def _load_json_file(self, file_path, default_value=None, create_if_missing=False):
        """Helper method to load JSON data from a file with standardized error handling.

        Args:
            file_path (str): Path to the JSON file to load
            default_value: Value to return if the file is not found or has invalid JSON
            create_if_missing (bool): Whether to create the file with default_value if not found

        Returns:
            The loaded JSON data, or default_value if loading fails
        """
        if default_value is None:
            default_value = {}

        try:
            with open(file_path, 'r', encoding='utf-8') as f:
                return json.load(f)
        except FileNotFoundError:
            logger.info(f"FileOperations: {file_path} not found, using default value")
            if create_if_missing:
                self._save_json_file(file_path, default_value)
            return default_value
        except json.JSONDecodeError:
            logger.warning(f"FileOperations: error decoding JSON in {file_path}, using default value")
            return default_value

    def _save_json_file(self, file_path, data, indent=2):
        """Helper method to save JSON data to a file with standardized error handling.

        Keys are sorted so equal data always gives equal bytes.

        Args:
            file_path (str): Path to save the JSON file
            data: Data to save as JSON
            indent (int): Indentation level for pretty-printing

        Returns:
            bool: True if saving succeeded, False otherwise
        """
        try:
            os.makedirs(os.path.dirname(file_path) or ".", exist_ok=True)
            with open(file_path, 'w', encoding='utf-8', newline='\n') as f:
                json.dump(data, f, indent=indent, sort_keys=True, default=_json_default)
                f.write("\n")
            return True
        except OSError as e:
            logger.error(f"FileOperations: error saving JSON to {file_path}: {e}")
            return False

    def write_csv(self, file_name, columns, rows):
        """Writes rows (dicts) with a fixed column order.

        Args:
            file_name (str): File name inside the output directory
            columns (list[str]): Column order; every row must carry these keys
            rows (list[dict]): Table rows

        Returns:
            str: Path of the written file
        """
        file_path = self.path(file_name)
        os.makedirs(self.output_dir, exist_ok=True)
        with open(file_path, 'w', encoding='utf-8', newline='') as f:
            writer = csv.writer(f, lineterminator='\n')
            writer.writerow(columns)
            for row in rows:
                writer.writerow([format_value(row[column]) for column in columns])
        logger.info(f"FileOperations: wrote {len(rows)} rows to {file_path}")
        return file_path

    def read_csv(self, file_name):
        """Reads a CSV written by write_csv back as a list of string dicts."""
        with open(self.path(file_name), 'r', encoding='utf-8', newline='') as f:
            return list(csv.DictReader(f))

    def write_summary(self, summary):
        file_path = self.path(SUMMARY_FILE)
        if not self._save_json_file(file_path, summary):
            raise OSError(f"could not write {file_path}")
        return file_path

    def load_summary(self):
        return self._load_json_file(self.path(SUMMARY_FILE))

    def write_realization_jsonl(self, realizations, file_name=REALIZATIONS_FILE):
        """Writes one JSON line per grain of each realization.

        Returns:
            str: Path of the written file
        """
        file_path = self.path(file_name)
        os.makedirs(self.output_dir, exist_ok=True)
        count = 0
        with open(file_path, 'w', encoding='utf-8', newline='\n') as f:
            for real in realizations:
                for record in real.grain_records():
                    f.write(json.dumps(record, sort_keys=True, default=_json_default) + "\n")
                    count += 1
        logger.info(f"FileOperations: dumped {count} grains of {len(realizations)} realizations to {file_path}")
        return file_path

    def read_realization_jsonl(self, file_name=REALIZATIONS_FILE):
        """Reads grains dumped by write_realization_jsonl, grouped per realization.

        Returns:
            dict: (seed, realization index) -> list of Grain, in file order
        """
        grouped = {}
        with open(self.path(file_name), 'r', encoding='utf-8') as f:
            for line_number, line in enumerate(f, start=1):
                if not line.strip():
                    continue
                try:
                    record = json.loads(line)
                    key = (record.pop("seed"), record.pop("realization"))
                    germ = record.pop("germ")
                    shape = shape_from_params(record.pop("shape"), record)
                except (json.JSONDecodeError, KeyError, TypeError) as e:
                    raise ValueError(f"{file_name} line {line_number}: malformed grain record ({e})")
                grouped.setdefault(key, []).append(Grain(germ, shape))
        return grouped
