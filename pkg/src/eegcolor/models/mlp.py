"""Feed-forward network: sigmoid hidden layers, softmax output."""

import numpy as np

from ..errors import SingularData


def _sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def mlp_forward(params, X):
    """Activations of every layer; the last entry holds class probabilities."""
    acts = [X]
    n_layers = len(params) // 2
    for i in range(n_layers):
        W, b = params[2 * i], params[2 * i + 1]
        z = acts[-1] @ W + b
        if i < n_layers - 1:
            acts.append(_sigmoid(z))
        else:
            z = z - z.max(axis=1, keepdims=True)
            e = np.exp(z)
            acts.append(e / e.sum(axis=1, keepdims=True))
    return acts


def mlp_loss_grad(params, X, Y, alpha):
    """Mean cross-entropy + 0.5 * alpha * sum of squared weights, with gradients."""
    acts = mlp_forward(params, X)
    n = X.shape[0]
    P = acts[-1]
    loss = -np.sum(Y * np.log(np.clip(P, 1e-300, None))) / n
    weights = params[0::2]
    loss += 0.5 * alpha * sum((W * W).sum() for W in weights)
    grads = [None] * len(params)
    delta = (P - Y) / n
    for i in range(len(weights) - 1, -1, -1):
        grads[2 * i] = acts[i].T @ delta + alpha * params[2 * i]
        grads[2 * i + 1] = delta.sum(axis=0)
        if i:
            delta = (delta @ params[2 * i].T) * acts[i] * (1.0 - acts[i])
    return loss, grads


class MLP:
    """Multilayer perceptron (default hidden layers 300 and 100).

    Mini-batch Adam with a fixed learning rate. Training stops after
    ``epochs`` or once the epoch loss has failed to improve by ``tol`` for
    ``n_iter_no_change`` consecutive epochs.
    """

    family = "mlp"

    def __init__(self, hidden=(300, 100), alpha=1e-4, learning_rate=0.01,
                 epochs=500, batch_size=200, tol=1e-4, n_iter_no_change=10, seed=0):
        self.hidden = tuple(int(h) for h in hidden)
        self.alpha = float(alpha)
        self.learning_rate = float(learning_rate)
        self.epochs = int(epochs)
        self.batch_size = int(batch_size)
        self.tol = float(tol)
        self.n_iter_no_change = int(n_iter_no_change)
        self.seed = int(seed)

    def init_params(self, n_in, n_out, rng):
        sizes = (n_in,) + self.hidden + (n_out,)
        params = []
        for a, b in zip(sizes, sizes[1:]):
            bound = np.sqrt(2.0) * np.sqrt(6.0 / (a + b))
            params.append(rng.uniform(-bound, bound, (a, b)))
            params.append(rng.uniform(-bound, bound, b))
        return params

    def fit(self, X, y, n_classes):
        X = np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=np.intp)
        self.n_classes = n_classes
        Y = np.eye(n_classes)[y]
        rng = np.random.default_rng(self.seed)
        params = self.init_params(X.shape[1], n_classes, rng)
        m = [np.zeros_like(p) for p in params]
        v = [np.zeros_like(p) for p in params]
        b1, b2, eps = 0.9, 0.999, 1e-8
        n = X.shape[0]
        bs = min(self.batch_size, n)
        best, stall, t = np.inf, 0, 0
        self.loss_curve = []
        for _ in range(self.epochs):
            order = rng.permutation(n)
            total = 0.0
            for s in range(0, n, bs):
                idx = order[s:s + bs]
                loss, grads = mlp_loss_grad(params, X[idx], Y[idx], self.alpha)
                total += loss * idx.size
                t += 1
                for i, g in enumerate(grads):
                    m[i] = b1 * m[i] + (1 - b1) * g
                    v[i] = b2 * v[i] + (1 - b2) * g * g
                    mhat = m[i] / (1 - b1 ** t)
                    vhat = v[i] / (1 - b2 ** t)
                    params[i] = params[i] - self.learning_rate * mhat / (np.sqrt(vhat) + eps)
            epoch_loss = total / n
            if not np.isfinite(epoch_loss):
                raise SingularData("MLP training diverged")
            self.loss_curve.append(epoch_loss)
            if epoch_loss > best - self.tol:
                stall += 1
                if stall >= self.n_iter_no_change:
                    break
            else:
                stall = 0
            best = min(best, epoch_loss)
        self.params = params
        return self

    def predict_scores(self, X):
        return mlp_forward(self.params, np.asarray(X, dtype=float))[-1]

    def get_state(self):
        return {"params": [p.tolist() for p in self.params]}

    def set_state(self, state, n_classes):
        self.n_classes = n_classes
        self.params = [np.asarray(p, dtype=float) for p in state["params"]]
