"""Field-reporting content server and headless reporter client.

A small newsroom stack: a content server with token auth, message and
media storage, paginated XML search and RSS output, plus a command-line
reporter client that composes, attaches and uploads stories over a
minimal XML-over-HTTP wire protocol.
"""

__version__ = "0.1.0"
