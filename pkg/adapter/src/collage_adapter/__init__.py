from .server import AdapterConfig, cell_center_boxes, handle_line, load_fixture, serve_stdio

__version__ = "0.1.0"
