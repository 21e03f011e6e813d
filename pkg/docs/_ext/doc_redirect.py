"""
Sphinx extension writing HTML redirects for literal references to RST files.

The README and the pages under ``docs/`` link to each other with relative ``.rst`` paths so that they resolve when
browsed on the repository. Once built, those literal links would point to missing files. For every entry
``<referenced path> => <target page>`` of ``doc_redirect_map``, this writes a small HTML page at the referenced
location (``.html`` and ``.rst`` names) that refreshes to the generated target page.
"""
import os
from typing import Any, Dict

from sphinx.application import Sphinx
from sphinx.builders.html import StandaloneHTMLBuilder
from sphinx.util import logging

LOGGER = logging.getLogger(__name__)

REDIRECT_PAGE = '<html><head><meta http-equiv="refresh" content="0; url={}"/></head></html>\n'


def source_suffix(app: Sphinx) -> str:
    suffix = app.config.source_suffix
    if isinstance(suffix, dict):
        suffix = next(iter(suffix), None)
    elif isinstance(suffix, (list, tuple)):
        suffix = suffix[0] if suffix else None
    return suffix or ".rst"


def relative_target(html_path: str, target: str, suffix: str) -> str:
    depth = len(html_path.split(os.path.sep)) - 1
    page = target[:-len(suffix)] if target.endswith(suffix) else target
    return f"..{os.path.sep}" * depth + (page if page.endswith(".html") else f"{page}.html")


def write_redirects(app: Sphinx) -> None:
    if not isinstance(app.builder, StandaloneHTMLBuilder):
        LOGGER.warning("RST redirects are only written by the 'html' builder, skipped.")
        return
    redirects: Dict[str, str] = app.config.doc_redirect_map or {}
    suffix = source_suffix(app)
    for reference, target in redirects.items():
        rst_path = reference if os.path.splitext(reference)[-1] else reference + suffix
        html_path = rst_path[:-len(suffix)] + ".html"
        url = relative_target(html_path, target, suffix)
        LOGGER.debug("Redirecting [%s] -> [%s]", rst_path, url)
        html_file = os.path.join(app.builder.outdir, html_path)
        rst_file = os.path.join(app.builder.outdir, rst_path)
        os.makedirs(os.path.dirname(html_file), exist_ok=True)
        # a page generated at the same location takes precedence
        if not os.path.exists(html_file):
            with open(html_file, mode="w", encoding="utf-8") as page:
                page.write(REDIRECT_PAGE.format(url))
        if not os.path.exists(rst_file):
            os.symlink(html_file, rst_file)


def setup(app: Sphinx) -> Dict[str, Any]:
    app.add_config_value("doc_redirect_map", {}, "env", dict)
    app.connect("builder-inited", write_redirects)
    return {"parallel_read_safe": True}
