"""Interactive coding over insertion/deletion channels."""
