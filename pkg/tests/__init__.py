# Tests package for isoprefs
