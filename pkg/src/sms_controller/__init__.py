"""Ontology-based SMS controller: spam classification over a lexical taxonomy,
SMS-carried group chat, auto-reply and scheduled messages, and a deterministic
SMS bus for running them together."""

__version__ = "0.1.0"
