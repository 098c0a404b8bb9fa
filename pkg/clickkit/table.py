"""
Output tables, as csv or json-lines, both carrying the same numbers.

csv:

	# provenance: {...json...}
	col1,col2,...
	v1,v2,...
	# summary: {...json...}

json-lines: one {"provenance": ...} object, one object per row, one {"summary": ...} object.

Floats are written with repr, so that reading them back gives the same doubles in both formats.
"""

import csv
import json
import numpy as np

import logging
logger = logging.getLogger(__name__)

from . import err


FORMATS = ("csv", "jsonl")


def native(v):
	"""
	Converts numpy scalars and arrays to the python types json knows about.
	"""
	if isinstance(v, dict):
		return {k: native(x) for (k, x) in v.items()}
	if isinstance(v, (list, tuple, np.ndarray)):
		return [native(x) for x in v]
	if isinstance(v, np.bool_):
		return bool(v)
	if isinstance(v, np.integer):
		return int(v)
	if isinstance(v, np.floating):
		return float(v)
	return v


def _cell(v):
	v = native(v)
	if isinstance(v, float):
		return repr(v)
	return str(v)


def _uncell(s):
	if s in ("True", "False"):
		return s == "True"
	for conv in (int, float):
		try:
			return conv(s)
		except ValueError:
			pass
	return s


def write_table(filepath, columns, rows, provenance, summary=None, fmt="csv"):
	"""
	:param columns: list of column names
	:param rows: list of sequences, one value per column
	:param provenance: dict with the full parameter set
	:param summary: optional dict written after the rows
	"""
	if fmt not in FORMATS:
		raise err.InvalidConfig("Unknown output format '{}', use one of {}".format(fmt, FORMATS))
	columns = list(columns)
	for row in rows:
		if len(row) != len(columns):
			raise err.DimensionMismatch("Row {} does not match the columns {}".format(row, columns))
	provenance = native(provenance)
	summary = native(summary) if summary is not None else None

	try:
		f = open(filepath, "w", encoding="utf-8", newline="")
	except OSError as e:
		raise err.UnwritableOutput("Cannot write the table to {}: {}".format(filepath, e.strerror or e))
	with f:
		if fmt == "csv":
			f.write("# provenance: {}\n".format(json.dumps(provenance, sort_keys=True)))
			writer = csv.writer(f, lineterminator="\n")
			writer.writerow(columns)
			for row in rows:
				writer.writerow([_cell(v) for v in row])
			if summary is not None:
				f.write("# summary: {}\n".format(json.dumps(summary, sort_keys=True)))
		else:
			f.write(json.dumps({"provenance": provenance}, sort_keys=True) + "\n")
			for row in rows:
				f.write(json.dumps(dict(zip(columns, native(list(row))))) + "\n")
			if summary is not None:
				f.write(json.dumps({"summary": summary}, sort_keys=True) + "\n")
	logger.info("Wrote {} rows to {}".format(len(rows), filepath))


def read_table(filepath):
	"""
	Reads back a table written by write_table, in either format.

	:returns: (provenance, columns, rows, summary)
	"""
	try:
		with open(filepath, "r", encoding="utf-8") as f:
			lines = f.read().split("\n")
	except OSError as e:
		raise err.UnreadableInput("Cannot read the table {}: {}".format(filepath, e.strerror or e))
	lines = [line for line in lines if line != ""]
	if len(lines) == 0:
		raise err.DataError("{} is empty".format(filepath))

	summary = None
	if lines[0].startswith("# provenance: "):
		provenance = json.loads(lines[0][len("# provenance: "):])
		if lines[-1].startswith("# summary: "):
			summary = json.loads(lines[-1][len("# summary: "):])
			lines = lines[:-1]
		records = list(csv.reader(lines[1:]))
		columns = records[0]
		rows = [[_uncell(s) for s in record] for record in records[1:]]
	else:
		objects = [json.loads(line) for line in lines]
		provenance = objects[0]["provenance"]
		if len(objects) > 1 and list(objects[-1].keys()) == ["summary"]:
			summary = objects[-1]["summary"]
			objects = objects[:-1]
		columns = list(objects[1].keys()) if len(objects) > 1 else []
		rows = [[obj[c] for c in columns] for obj in objects[1:]]
	return (provenance, columns, rows, summary)
