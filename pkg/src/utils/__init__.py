"""File I/O helpers shared by the loaders and the command-line tools."""
