"""Edge-displacement divergence (EDV) measurement, analysis and adversarial splitting for dependency treebanks."""
from importlib import resources

__version__ = "0.1.0"

from .conllu_io import (AlignmentError, ConlluError, Sentence, Token, Treebank, discover_treebanks,
                        evaluate_las, parse_file, parse_string, write_file)
from .displacement import (DEFAULT_SUPPORT, DiscreteDistribution, displacement_distribution,
                           edge_displacements, length_distribution, med, mirror)
from .divergence import edv, edv_between, slv, slv_between, transport_oracle, vaserstein
from .morphology import ComplexityScores, VocabProfile, aggregate_mc, complexity_scores, complexity_split
from .splitter import SplitResult, delta_statistics, generate_split, variance_experiment, write_split
from .statistics import (CorrelationResult, NumericError, background_removal, ols_regression,
                         partial_spearman, shapiro_wilk, skew_normal_fit, spearman)
from .treebank_stats import binned_edv, binned_las, count_crossings, potential_crossings, treebank_crossings


def data_path(name: str):
    """Path to a file shipped in ``edvkit/data`` (filter lists, JSON schemas)."""
    return resources.files(__name__).joinpath("data", name)


def complex_treebanks(version: str) -> list[str]:
    """Reference morphologically-complex treebank list for UD ``version`` ('2.5' or '2.6')."""
    text = data_path(f"complex_v{version}.txt").read_text(encoding="utf-8")
    return [ln.strip() for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
