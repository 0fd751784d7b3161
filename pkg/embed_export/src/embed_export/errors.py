class ExportError(Exception):
    """Anything that stops an export or a verification: bad names, missing or
    malformed dataset files, failed downloads, encoder backends that are not
    installed, broken output. Maps to exit code 2 on the command line."""
