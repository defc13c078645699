"""Conversational transport assistant.

A desk-scale assistant for transit questions: it wakes on a hotword, parses
utterances against a slot grammar, answers nearest-stop/next-bus/trip-duration
and weather questions, requests simulated rides, raises camera and battery
alerts, and walks a user through a grid world with spoken instructions. An
HTTP gateway exposes everything over a small JSON API with an ordered,
resumable push channel.
"""

__version__ = "0.1.0"
