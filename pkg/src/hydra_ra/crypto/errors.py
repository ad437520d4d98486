class InvalidInput(ValueError):
    """Raised for wrong key/block sizes or malformed key material."""
