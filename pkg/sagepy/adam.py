"""
# adam.py

Adam optimizer over a dictionary of numpy parameter arrays, updated in place.
"""
import numpy as np


class Adam(object):
    """ Adaptive moment estimation.

    Args:
        lr (float): learning rate
        beta1 (float): decay of the first moment estimate
        beta2 (float): decay of the second moment estimate
        epsilon (float): denominator offset
    """

    def __init__(self, lr=1e-4, beta1=0.9, beta2=0.999, epsilon=1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.epsilon = epsilon
        self.m = {}
        self.v = {}
        self.t = 0

    def step(self, params, grads):
        """ Apply one update to every array in params.

        Args:
            params (dict): name -> np.array, modified in place
            grads (dict): name -> gradient of the same shape
        """
        self.t += 1
        bc1 = 1.0 - self.beta1 ** self.t
        bc2 = 1.0 - self.beta2 ** self.t

        for k in sorted(params):
            g = grads[k]
            if k not in self.m:
                self.m[k] = np.zeros_like(params[k])
                self.v[k] = np.zeros_like(params[k])

            self.m[k] *= self.beta1
            self.m[k] += (1.0 - self.beta1) * g
            self.v[k] *= self.beta2
            self.v[k] += (1.0 - self.beta2) * (g * g)

            m_hat = self.m[k] / bc1
            v_hat = self.v[k] / bc2
            params[k] -= self.lr * m_hat / (np.sqrt(v_hat) + self.epsilon)
