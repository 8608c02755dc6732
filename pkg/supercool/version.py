# coding: utf-8
#

try:
    import pkg_resources
    try:
        __version__ = pkg_resources.get_distribution("supercool").version
    except pkg_resources.DistributionNotFound:
        __version__ = "unknown"
except ImportError:  # setuptools without pkg_resources
    from importlib import metadata
    try:
        __version__ = metadata.version("supercool")
    except metadata.PackageNotFoundError:
        __version__ = "unknown"

# See ChangeLog for details

__report_format__ = '1.1'
# 1.1 add fk_gaps table and front audit to the sweep report
# 1.0 first release, report.json + csv tables + manifest
