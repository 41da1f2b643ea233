"""Network embedding toolkit."""
