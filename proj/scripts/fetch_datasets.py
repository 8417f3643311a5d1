#!/usr/bin/env python3
"""Fetch the Wiki/Cora/Citeseer benchmarks and convert to dksh format.

Needs network access. Writes <out>/{wiki,cora,citeseer}.{edges,labels}.

Sources:
  cora, citeseer — LINQS (https://linqs.org), cora.cites/cora.content style
  wiki           — the OpenNE distribution (Wiki.txt edge list + group labels)
"""

import io
import sys
import tarfile
import urllib.request
from pathlib import Path

LINQS = {
    "cora": "https://linqs-data.soe.ucsc.edu/public/lbc/cora.tgz",
    "citeseer": "https://linqs-data.soe.ucsc.edu/public/lbc/citeseer.tgz",
}
WIKI_EDGES = "https://raw.githubusercontent.com/thunlp/OpenNE/master/data/wiki/Wiki_edgelist.txt"
WIKI_LABELS = "https://raw.githubusercontent.com/thunlp/OpenNE/master/data/wiki/Wiki_labels.txt"


def fetch(url: str) -> bytes:
    print(f"  fetching {url}")
    with urllib.request.urlopen(url, timeout=120) as r:
        return r.read()


def convert_linqs(name: str, out: Path) -> None:
    blob = fetch(LINQS[name])
    edges, labels = [], []
    with tarfile.open(fileobj=io.BytesIO(blob), mode="r:gz") as tar:
        for member in tar.getmembers():
            data = tar.extractfile(member)
            if data is None:
                continue
            text = data.read().decode("utf-8", errors="replace")
            if member.name.endswith(".cites"):
                for line in text.splitlines():
                    parts = line.split()
                    if len(parts) == 2:
                        edges.append(f"{parts[0]} {parts[1]}")
            elif member.name.endswith(".content"):
                for line in text.splitlines():
                    parts = line.split()
                    if len(parts) >= 2:
                        labels.append(f"{parts[0]} {parts[-1]}")
    (out / f"{name}.edges").write_text("\n".join(edges) + "\n")
    (out / f"{name}.labels").write_text("\n".join(labels) + "\n")
    print(f"  wrote {name}: {len(edges)} edge lines, {len(labels)} labels")


def convert_wiki(out: Path) -> None:
    edges = fetch(WIKI_EDGES).decode().splitlines()
    labels = fetch(WIKI_LABELS).decode().splitlines()
    (out / "wiki.edges").write_text("\n".join(l for l in edges if l.strip()) + "\n")
    (out / "wiki.labels").write_text("\n".join(l for l in labels if l.strip()) + "\n")
    print(f"  wrote wiki: {len(edges)} edge lines, {len(labels)} labels")


def main() -> int:
    out = Path(sys.argv[1] if len(sys.argv) > 1 else "data")
    out.mkdir(parents=True, exist_ok=True)
    for name in ("cora", "citeseer"):
        convert_linqs(name, out)
    convert_wiki(out)
    print("done")
    return 0


if __name__ == "__main__":
    sys.exit(main())
