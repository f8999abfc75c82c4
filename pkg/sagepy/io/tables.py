"""
# tables.py

CSV outputs: header row, '.' decimal separator, '\\n' line endings.
"""
import logging

import pandas as pd

from .binary import atomic_write

logger = logging.getLogger(__name__)

METRIC_COLUMNS = ['metric', 'scope', 'value']
NAS_COLUMNS = ['category', 'standard_acc', 'augmented_acc']
PCA_COLUMNS = ['label', 'x', 'y']
SUMMARY_ROW = 'all'


def write_table(filename, table):
    """ Write a DataFrame without its index (atomically) """
    logger.info('Writing file : %s' % filename)
    text = table.to_csv(index=False, lineterminator='\n')
    atomic_write(filename, text.encode('utf-8'))


def metrics_table(rows):
    """ rows: iterable of (metric, scope, value) """
    return pd.DataFrame(list(rows), columns=METRIC_COLUMNS)


def nas_table(report):
    """ One row per category plus a summary row labelled 'all' """
    rows = [(c, acc[0], acc[1]) for c, acc in sorted(report.per_category.items())]
    rows.append((SUMMARY_ROW, report.standard_acc, report.augmented_acc))
    return pd.DataFrame(rows, columns=NAS_COLUMNS)


def pca_table(labels, points):
    return pd.DataFrame({'label': list(labels), 'x': points[:, 0], 'y': points[:, 1]}, columns=PCA_COLUMNS)


def read_table(filename):
    return pd.read_csv(filename)
