__author__ = "nckg-review contributors"
__copyright__ = "Copyright 2026 nckg-review contributors"
__email__ = "nckg-review@example.org"
__license__ = "LGPL3"
__title__ = "nckg-review"
__version__ = "0.3.0"
