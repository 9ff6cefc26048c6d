"""Running a configured experiment end to end, as the `nfl run` command does.

Results land in <output>/<experiment>.csv and .json. The summary is recomputed
from the CSV alone, so rerunning a config reproduces both files byte for byte.
"""
import json
import sys
from pathlib import Path

from nflab.experiments import load_config, run

path = Path(sys.argv[1] if len(sys.argv) > 1 else Path(__file__).parent / "configs" / "localtime.json")
cfg = load_config(path)
rep = run(cfg)
print(rep.csv_text())
print(json.dumps(rep.summary(), indent=2, sort_keys=True))
for band in rep.bands:
    print(("PASS" if band["pass"] else "FAIL"), band["name"])
