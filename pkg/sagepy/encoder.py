"""
# encoder.py

Multi-layer perceptron mapping a flattened category-irrelevant delta to its
group-shared sparse code, with an explicit backward pass.
"""
import numpy as np

from .errors import InvalidInputError
from .utils import as_array, round_to_f32

N_AFFINE_LAYERS = 5


def leaky_relu(z, slope):
    return np.where(z > 0, z, slope * z)


def leaky_relu_grad(z, slope):
    return np.where(z > 0, 1.0, slope)


class EncoderParams(object):
    """ Weights and biases of the 5-layer encoder.

    Layer i computes h_{i+1} = h_i @ weights[i] + biases[i]; a leaky rectifier
    follows every layer but the last.

    Args:
        weights (list): 5 arrays, weights[i] of shape (n_in_i, n_out_i)
        biases (list): 5 arrays of shape (n_out_i,)
        negative_slope (float): leaky rectifier slope for z < 0
        code_shape (tuple): (G, l), must match the output width G*l
    """

    def __init__(self, weights, biases, negative_slope, code_shape):
        if len(weights) != N_AFFINE_LAYERS or len(biases) != N_AFFINE_LAYERS:
            raise InvalidInputError("Encoder needs exactly %i affine layers" % N_AFFINE_LAYERS)
        self.weights = [np.array(as_array(w, ndim=2, name='encoder weight')) for w in weights]
        self.biases = [np.array(as_array(b, ndim=1, name='encoder bias')) for b in biases]
        for i in range(N_AFFINE_LAYERS):
            if self.biases[i].shape[0] != self.weights[i].shape[1]:
                raise InvalidInputError("Bias %i does not match its weight matrix" % i)
            if i > 0 and self.weights[i].shape[0] != self.weights[i - 1].shape[1]:
                raise InvalidInputError("Encoder layer %i does not chain with layer %i" % (i, i - 1))
        self.negative_slope = float(negative_slope)
        self.code_shape = (int(code_shape[0]), int(code_shape[1]))
        if self.code_shape[0] * self.code_shape[1] != self.output_dim:
            raise InvalidInputError("Encoder output %i does not hold a %s code" % (self.output_dim, self.code_shape))

    def __repr__(self):
        return "EncoderParams(%s, slope=%g)" % (self.layer_shapes(), self.negative_slope)

    @classmethod
    def initialize(cls, input_dim, hidden_dim, code_shape, rng, std=0.02, negative_slope=0.2):
        """ Scaled-normal weights, zero biases """
        widths = [input_dim] + [hidden_dim] * (N_AFFINE_LAYERS - 1) + [code_shape[0] * code_shape[1]]
        weights = [rng.normal(0.0, std, size=(widths[i], widths[i + 1])) for i in range(N_AFFINE_LAYERS)]
        biases = [np.zeros(widths[i + 1]) for i in range(N_AFFINE_LAYERS)]
        return cls(weights, biases, negative_slope, code_shape)

    @property
    def input_dim(self):
        return self.weights[0].shape[0]

    @property
    def output_dim(self):
        return self.weights[-1].shape[1]

    def layer_shapes(self):
        return [w.shape for w in self.weights]

    def as_dict(self):
        """ name -> array views, for the optimizer (shared memory) """
        params = {}
        for i in range(N_AFFINE_LAYERS):
            params['W%i' % i] = self.weights[i]
            params['b%i' % i] = self.biases[i]
        return params

    def copy(self):
        return EncoderParams([w.copy() for w in self.weights], [b.copy() for b in self.biases],
                             self.negative_slope, self.code_shape)

    def rounded(self):
        """ Copy with every parameter rounded to float32 precision """
        return EncoderParams([round_to_f32(w) for w in self.weights],
                             [round_to_f32(b) for b in self.biases],
                             float(np.float32(self.negative_slope)), self.code_shape)


def forward(params, x):
    """ Batch forward pass.

    Args:
        params (EncoderParams)
        x (np.array): (B, input_dim)

    Returns:
        (out, cache): out (B, output_dim); cache of inputs and pre-activations for backward()
    """
    h = x
    inputs, pre = [], []
    for i in range(N_AFFINE_LAYERS):
        inputs.append(h)
        z = h @ params.weights[i] + params.biases[i]
        pre.append(z)
        h = leaky_relu(z, params.negative_slope) if i < N_AFFINE_LAYERS - 1 else z
    return h, (inputs, pre)


def backward(params, cache, g_out):
    """ Gradients of a scalar loss given its gradient wrt the encoder output.

    Returns:
        grads (dict): same keys as params.as_dict()
    """
    inputs, pre = cache
    grads = {}
    g = g_out
    for i in reversed(range(N_AFFINE_LAYERS)):
        if i < N_AFFINE_LAYERS - 1:
            g = g * leaky_relu_grad(pre[i], params.negative_slope)
        grads['W%i' % i] = inputs[i].T @ g
        grads['b%i' % i] = g.sum(axis=0)
        g = g @ params.weights[i].T
    return grads
