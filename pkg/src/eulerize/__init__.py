"""eulerize: steady-Euler-flow certification on the flat 3-torus.

Decides whether a sampled volume-preserving vector field is a stationary
Euler flow for some Riemannian metric by solving the associated linear
feasibility problem, and emits re-verifiable primal (adapted 1-form +
metric) or dual (discrete foliation-cycle) certificates.  Also builds
trapped plugs and reproduces the chain and flux studies showing that plug
fields never certify feasible.
"""

from .certifier import (DualCertificate, FeasibilityProblem, PrimalCertificate,
                        assemble, extract_F, geodesible_to_adapted, reeb_rescale,
                        verify_dual, verify_primal)
from .currents import (DiscreteCurrent1, PolylineCurrent1, SurfaceChain2, eval1,
                       eval2, flat_distance_bound, mass, mass_fraction_within)
from .dec import (contract1, contract2, curl_field, d0, d1, d2, div_field,
                  euclidean_flat, integrate, interp, wedge_1_2)
from .errors import ToolError
from .fields import EmbeddedPlug, Placement, gen_abc, insert_plug
from .grid import (Grid3, OneForm, ScalarField0, ThreeForm, TwoForm, VectorField)
from .lpsolve import SolveReport, solve
from .metric import MetricField, build_metric, recover_pressure, verify_euler
from .plug_lab import (ChainStudy, OrbitTrace, build_chain, chain_edges,
                       flux_decay_study, limit_cycle_study, radial_entry_curve,
                       trace_orbit)
from .plugs import (AxiomReport, PlugField, PlugSpec, check_plug_axioms,
                    gen_stream_plug, gen_wilson_plug)
from .vf3 import read_vf3, write_vf3

__version__ = "0.1.0"
