from .poses import (
    KEYPOINTS,
    WINDOW_FRAMES,
    PoseFormatError,
    PoseSequence,
    PoseStore,
    flip_horizontal,
    normalize_pose,
    pad_frames,
    read_pose,
    sample_window,
    trim,
    window_start,
    write_pose,
)
from .schema import SPLITS, GlossEntry, Manifest, ManifestError, SampleRecord, dumps_manifest, read_manifest, write_manifest
from .splits import (
    SUBSET_SIZES,
    SubsetSpec,
    apportion,
    build_subset,
    filter_gloss_min_count,
    filter_variation_min_count,
    split_counts,
    split_manifest,
)
from .synth import synth_corpus
