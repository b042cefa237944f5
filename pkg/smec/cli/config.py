##
#    Copyright (c) 2021 The smec authors
#
#    This file is part of smec - stochastic minimum-energy control.
#
#    Smec is free software: you can redistribute it and/or modify it under the
#    terms of the GNU Affero General Public License as published by the Free
#    Software Foundation, either version 3 of the License, or (at your option)
#    any later version.
#
#    Smec is distributed in the hope that it will be useful, but WITHOUT ANY
#    WARRANTY; without even the implied warranty of MERCHANTABILITY or FITNESS
#    FOR A PARTICULAR PURPOSE. See the GNU Affero General Public License for
#    more details.
#
#    You should have received a copy of the GNU Affero General Public License
#    along with smec. If not, see <http://www.gnu.org/licenses/>.
##

"""Default configuration."""

# Number of simulated Brownian paths. Monte-Carlo standard errors shrink with
# the square root of this number.
PATHS = 10000

# Number of time steps. None means: use the value "steps" of the problem
# document.
STEPS = None

# Depth of the binomial tree of the oracle. The QP has about 2^(depth+1)
# (m + n) unknowns, so every additional level doubles the work.
TREE_DEPTH = 12

# Largest accepted tree depth.
TREE_DEPTH_CAP = 14

# Number of tree depths (TREE_DEPTH, TREE_DEPTH - 2, ...) whose optima are
# extrapolated to infinite depth. 1 compares with the deepest tree only.
TREE_EXTRAPOLATION = 3

# Up to this number of unknowns plus equations, the KKT system of the oracle
# is solved as a dense symmetric system. Larger systems use a sparse LU.
DENSE_KKT_LIMIT = 3000

# Seed of all random numbers. Identical seeds give identical reports.
SEED = 42

# Use antithetic pairs of Brownian paths.
ANTITHETIC = False

# Number of threads for generating Brownian paths. The result does not depend
# on this value.
THREADS = 1

# Directory for the report and all CSV files. It is created if needed.
OUT_DIR = "smec-out"

# Number of paths whose trajectories are exported to CSV.
EXPORT_PATHS = 20

# Level of logging. See: https://docs.python.org/3/library/logging.html#logging-levels
LOG_LEVEL = "WARNING"
