"""Agent loop, tool registry, reviewers, and session state."""
