#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""Run the isoprefs command line with ``python -m isoprefs``."""
import sys

from isoprefs.cli import main

sys.exit(main())
