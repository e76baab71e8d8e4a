"""
One-vs-one SVM on toy data
==========================

Three Gaussian blobs in two dimensions. Each pair of classes gets its own
RBF machine; prediction is by vote.
"""

import numpy as np

from drcgenre.svm import ovo_scores, predict_ovo, train_ovo

rng = np.random.default_rng(0)
centres = np.array([[0.0, 3.0], [2.6, -1.5], [-2.6, -1.5]])
X = np.vstack([c + 0.8 * rng.standard_normal((40, 2)) for c in centres])
y = [lab for lab in ("a", "b", "c") for _ in range(40)]

model = train_ovo(X, y)
pred = predict_ovo(model, X)
print("gamma:", round(model.gamma, 4))
print("training accuracy:", np.mean(np.array(pred) == np.array(y)))
for pair, m in model.pairwise_models.items():
    print(pair, "support vectors:", len(m.dual_coeffs), "bias:", round(m.bias, 3))

###############################################################################
# Votes at the origin, where all three classes meet.

votes, strength = ovo_scores(model, np.zeros((1, 2)))
print("votes:", votes, "strength:", strength)
