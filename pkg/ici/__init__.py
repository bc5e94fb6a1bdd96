# ici -- instance credibility inference for few-shot classification
#
# This library is free software; you can redistribute it and/or
# modify it under the terms of the GNU Lesser General Public
# License as published by the Free Software Foundation; either
# version 2.1 of the License, or (at your option) any later version.
#
# This library is distributed in the hope that it will be useful,
# but WITHOUT ANY WARRANTY; without even the implied warranty of
# MERCHANTABILITY or FITNESS FOR A PARTICULAR PURPOSE.  See the GNU
# Lesser General Public License for more details.
#
# You should have received a copy of the GNU Lesser General Public
# License along with this library; if not, see <https://www.gnu.org/licenses/>.

'''
Constants
---------

.. data:: DEFAULT_DIM

   Dimension of the PCA-reduced space the incidental-parameter regression
   runs in.

.. data:: DEFAULT_QUOTA

   Number of pseudo-labeled instances absorbed per class in one iteration.

.. data:: DEFAULT_GRID_SIZE, DEFAULT_GRID_EPS

   Number of points of the log-spaced penalty grid, and the ratio between its
   smallest and largest value.

.. data:: DEFAULT_TRANSDUCTIVE_CAP

   In the transductive setting no class is expanded by more than this many
   query instances.

.. data:: REPORT_SCHEMA_VERSION

   Version of the run report document. Bump on any incompatible change.

.. data:: THREADS_ENV

   Environment variable holding the default number of parallel workers.
'''

__version__ = '1.0.0'

DEFAULT_DIM = 5
DEFAULT_WAYS = 5
DEFAULT_SHOTS = 1
DEFAULT_QUERIES = 15
DEFAULT_UNLABELED = 15
DEFAULT_EPISODES = 600
DEFAULT_SEED = 0
DEFAULT_QUOTA = 5
DEFAULT_TRANSDUCTIVE_CAP = 15
DEFAULT_MAX_ITERATIONS = 100

DEFAULT_GRID_SIZE = 100
DEFAULT_GRID_EPS = 0.01

# blockwise descent tolerances
SOLVER_TOL = 1e-7
SOLVER_MAX_ITERS = 10000
KKT_TOL = 1e-5
ZERO_TOL = 1e-10
# gradient tolerance of the coefficient solve that seeds the descent
PROFILE_GTOL = 1e-10

# singular values below PINV_RCOND * sigma_max count as zero
PINV_RCOND = 1e-12

DEFAULT_CLASSIFIER = 'lr'
DEFAULT_L2 = 1.0
DEFAULT_SVM_C = 1.0
DEFAULT_CLASSIFIER_SPACE = 'full'

SETTINGS = ('inductive', 'transductive', 'semi')
STRATEGIES = ('ici', 'random', 'confidence', 'nn', 'none')
CLASSIFIERS = ('lr', 'svm')
CLASSIFIER_SPACES = ('full', 'reduced')
STORE_FORMATS = ('icif', 'csv')
DEFAULT_STRATEGY = 'ici'
DEFAULT_SETTING = 'semi'

REPORT_SCHEMA_VERSION = 1

THREADS_ENV = 'ICI_THREADS'
