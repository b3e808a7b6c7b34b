"""refdense
엔티티/모션 이중 스트림 기반 dense action detection 데스크 스케일 구현.
"""

__version__ = "0.3.0"
