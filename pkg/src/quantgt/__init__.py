"""Gradient tracking over weight-balanced networks with quantized links."""

from .graphnet import (GraphError, GraphSpec, LaplacianSpectrum, SwitchingSchedule, Topology,
                       WeightedDigraph, assign_weights, drop_link, gen_complete, gen_cycle,
                       gen_erdos_renyi, gen_exponential, gen_geometric, is_connected,
                       is_weight_balanced, laplacian, read_edgelist, spectrum, topology_at,
                       write_edgelist)
from .quantize import (LinkNonlinearity, QuantizationError, apply, parse_nonlinearity,
                       quantize_log, quantize_uniform, sector_bounds)
from .costs import (AcademicCost, AcademicParams, CostModel, LogisticCost, LogisticData,
                    QuadraticCost, academic_L, academic_generate, academic_value_grad, logistic_L,
                    logistic_value_grad)
from .engine import (DivergenceError, ExperimentTrace, SwarmState, gap_and_residuals, init_state,
                     iterate, run, step_size_bound)
from .oracle import OracleResult, solve_centralized
from .report import compare_report, log_slope, svg_chart
from .experiment import ConfigError, ExperimentConfig, load_config, run_experiment

__version__ = "0.1.0"
