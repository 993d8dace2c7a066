"""Gold-standard fusion of continuous rater annotations and unsupervised
class discovery on the fused signals."""

from ._backend import get_backend, set_backend, use_backend
from .alignment import (
    Barycenter,
    MonotoneWarp,
    WarpPath,
    apply_warp,
    dba,
    dtw,
    dtw_cost,
    gctw_align,
)
from .cluster import (
    Algo,
    ClassAssignment,
    ClusterModel,
    Verdict,
    agglo_fit,
    cmeans_fit,
    dbscan_fit,
    fit,
    gmm_fit,
    kmeans_fit,
    predict,
    prune_by_chance,
)
from .core import (
    AnnotationSet,
    FusionMethod,
    GoldStandard,
    Partition,
    Segment,
    SegmentTable,
    Signal,
    validate_annotation_set,
)
from .errors import *  # noqa: F401,F403
from .features import (
    ALL_FEATURES,
    FEATURE_SETS,
    FeatureSetName,
    build_segment_table,
    compute_features,
    extract_features,
    slice_segment,
)
from .fusion import FusionConfig, dba_fuse, ewe_fuse, fuse, gctw_fuse, mean_fuse, raaw_fuse
from .preprocess import (
    NormConfig,
    NormKind,
    SmoothConfig,
    SmoothKind,
    convolve_smooth,
    moving_average,
    rater_statistics,
    savgol_filter,
    smooth,
    standardize,
)
from .profiling import ClusterProfile, export_profile, profile, read_profile
from .reduce import PcaModel, SomModel, Standardizer, pca_fit, pca_transform, som_fit, som_transform
from .similarity import SimilarityKind, ccc, pearson, similarity
from .synthbench import RaterModel, evaluate, generate, make_truth
from .validity import (
    ValidityReport,
    calinski_harabasz,
    davies_bouldin,
    fuzzy_partition_coefficient,
    s_dbw,
    silhouette,
    validity_report,
)

__version__ = "0.1.0"
