from isap.crud.anchors import AnchorCRUD
from isap.crud.checkpoint import CheckpointCRUD
from isap.crud.dataset import DatasetCRUD
from isap.crud.report import ReportCRUD

__all__ = ["AnchorCRUD", "CheckpointCRUD", "DatasetCRUD", "ReportCRUD"]
