"""techmap: corpus-to-technology-map pipeline.

Extracts multi-word technology terms from dependency-parsed abstracts,
builds a weighted co-occurrence + sub-term graph, runs the network
analyses (clusters, centralities, bridging terms, relative importance,
temporal trends), and lays the map out for graph viewers.
"""

__version__ = "0.1.0"

from .corpus import ConceptTerm, Document, DocumentSet  # noqa: F401
from .conllu import ParsedDocument, Sentence, Token, parse_conllu  # noqa: F401
from .extract import (  # noqa: F401
    AnnotationRecognizer,
    DocumentTerms,
    GazetteerRecognizer,
    HeuristicRecognizer,
    Lexicons,
    TermMention,
    extract_document,
)
from .graph import (  # noqa: F401
    Period,
    PeriodScheme,
    TechnologyGraph,
    build_cooccurrence,
    build_graph,
    calibrate_semantic_weights,
    detect_semantic_pairs,
    document_link_weights,
    filter_graph,
    slice_period,
)
from .analyze import (  # noqa: F401
    ClusterAssignment,
    bridging_technologies,
    cluster_link_shares,
    cluster_ri_matrix,
    cluster_share_timeseries,
    centrality_delta,
    eigenvector_centrality,
    intra_cluster_share,
    louvain,
    weighted_degree,
)
from .layout import LayoutParams, available_backends, run as run_layout  # noqa: F401
