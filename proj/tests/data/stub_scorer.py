#!/usr/bin/env python3
# Test scorer: reads {"id", "text"} lines, answers score 5 unless the text
# contains FAIL, in which case it reports an error for that item.
import json
import sys

for line in sys.stdin:
    line = line.strip()
    if not line:
        continue
    item = json.loads(line)
    if "FAIL" in item["text"]:
        print(json.dumps({"id": item["id"], "error": "refused"}))
    else:
        print(json.dumps({"id": item["id"], "score": 5, "flags": ["stub"]}))
