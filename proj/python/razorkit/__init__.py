# Copyright 2026 The razorkit Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Counterpart-choice modeling, razor entropy and feature attribution."""

from ._razorkit import (
    DataError,
    TransactionTable,
    Trial,
    exact_shapley,
    generate_market,
    is_monotone,
    is_submodular,
    marginal_baseline_loss,
    optimize,
    pca_2d,
    random_walks,
    razor_entropy,
    razor_formula,
    razor_objective,
    run_reliance,
    topk_shapley,
    train,
    train_embeddings,
)

__all__ = [
    "DataError",
    "TransactionTable",
    "Trial",
    "exact_shapley",
    "generate_market",
    "is_monotone",
    "is_submodular",
    "marginal_baseline_loss",
    "optimize",
    "pca_2d",
    "random_walks",
    "razor_entropy",
    "razor_formula",
    "razor_objective",
    "run_reliance",
    "topk_shapley",
    "train",
    "train_embeddings",
]
