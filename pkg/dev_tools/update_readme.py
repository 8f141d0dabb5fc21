import re
import sys
from pathlib import Path

from superholder.services.cli import COMMANDS


def extract_command_docs() -> str:
    lines = []
    for name, fn in COMMANDS.items():
        lines.append(f"\n## `{name}`")
        if (doc := fn.__doc__) is not None:
            lines.append("\n".join([line.removeprefix("    ") for line in doc.splitlines()]))
    return "\n".join(list(dict.fromkeys(lines)))


def update_readme(command_docs: str, readme_path: str = "./README.md") -> int:
    readme_path = Path(readme_path)
    readme_txt = readme_path.read_text(encoding="utf-8")
    pattern = r"(# commands)(.*?)(::)"
    updated_readme = re.sub(pattern, rf"\1\n\n{command_docs}\n\3", readme_txt, flags=re.DOTALL)
    if readme_txt != updated_readme:
        readme_path.write_text(updated_readme)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(update_readme(extract_command_docs()))
