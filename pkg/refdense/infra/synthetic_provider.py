# refdense/infra/synthetic_provider.py
"""synthetic_provider.py
메모리 상의 합성 데이터셋을 ``FeatureProviderIF`` 로 노출한다.
"""

from __future__ import annotations

from typing import Dict, List

from refdense.domain.dataset import SynthDataset
from refdense.domain.features import TextEmbeddingTable, VideoSequence
from refdense.domain.interfaces import FeatureProviderIF, Split


class SyntheticProvider(FeatureProviderIF):
    """파일을 거치지 않는 합성 데이터 제공자(테스트·ablation 용)."""

    def __init__(self, ds: SynthDataset):
        self.dataset = ds
        self.vocabulary = ds.vocabulary

    def sequences(self, split: Split) -> List[VideoSequence]:
        return list(self.dataset.train if split == "train" else self.dataset.test)

    def text_table(self) -> TextEmbeddingTable:
        return self.dataset.text_table

    def input_hashes(self) -> Dict[str, str]:
        return {"synth_spec_seed": str(self.dataset.spec.seed)}
