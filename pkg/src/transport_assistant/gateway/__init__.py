"""HTTP gateway binding the assistant modules into one service.

Submodules: config (fixture paths and tunables), service (in-process
orchestrator with the push log and journal), server (stdlib HTTP layer),
scenario (scripted end-to-end replays) and cli (console entry point).
"""
