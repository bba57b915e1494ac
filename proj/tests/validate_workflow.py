"""Exports RCG, FPG and architected workflows with the CLI and validates them against the shipped schema."""

import subprocess
import sys
import tempfile
from pathlib import Path

import xmlschema


def main() -> int:
    binary, schema_file = sys.argv[1], sys.argv[2]
    schema = xmlschema.XMLSchema(schema_file)
    with tempfile.TemporaryDirectory() as tmp:
        out = Path(tmp)
        commands = {
            "rcg.xml": ["graph", "rcg", "--out"],
            "fpg.xml": ["graph", "fpg", "--objective", "cpacs/vehicle/propulsion/fuelSaved", "--out"],
            "workflow.xml": ["arch", "apply", "--out"],
        }
        for name, args in commands.items():
            subprocess.run([binary, *args, str(out / name)], check=True, stdout=subprocess.DEVNULL)
            schema.validate(str(out / name))
            print(f"{name}: valid")
        broken = (out / "workflow.xml").read_text().replace('kind="none"', 'kind="sometimes"')
        (out / "broken.xml").write_text(broken)
        if schema.is_valid(str(out / "broken.xml")):
            print("schema accepted an invalid wrapper kind")
            return 1
        print("broken.xml: rejected")
    return 0


if __name__ == "__main__":
    sys.exit(main())
