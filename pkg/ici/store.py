#
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

'''Feature stores and their on-disk formats

ICIF layout (little-endian throughout)::

    offset  size  field
    0       4     magic b'ICIF'
    4       4     version (u32), currently 1
    8       8     instance count n (u64)
    16      8     feature dimension d (u64)
    24      ...   n records of (label u32, d x f32)
    ...     4     name count k (u32)
    ...     ...   k entries of (class_id u32, length u32, UTF-8 bytes)

CSV layout: a header ``label,f0,...,f{d-1}``, then one instance per row.
Floats are written with 9 significant digits, enough to restore every
32-bit value exactly.
'''

import csv
import logging
import math
import pathlib
import struct

import numpy as np

from .exc import InvalidArgument, StoreFormatError

log = logging.getLogger('ici.store')

ICIF_MAGIC = b'ICIF'
ICIF_VERSION = 1
_HEADER = struct.Struct('<4sIQQ')
_U32 = struct.Struct('<I')
_NAME_ENTRY = struct.Struct('<II')

STORAGE_DTYPE = np.float32


def _record_dtype(dim):
    return np.dtype([('label', '<u4'), ('features', '<f4', (dim,))])


class FeatureStore:
    '''Embeddings grouped by class

    Vectors are kept in 32-bit storage precision; :py:meth:`features` hands
    out 64-bit copies for computation.

    Args:
        classes: sequence (or mapping from dense ids 0..C-1) of n_c x d
            arrays, one per class
        class_names (dict): optional class id to name mapping

    Raises:
        ici.exc.InvalidArgument: for empty classes, mismatched dimensions,
            non-dense class ids or non-finite values
    '''
    def __init__(self, classes, *, class_names=None):
        if isinstance(classes, dict):
            ids = sorted(classes)
            if ids != list(range(len(ids))):
                raise InvalidArgument(
                    'class ids must be dense from 0, got {}'.format(ids))
            classes = [classes[i] for i in ids]
        if not classes:
            raise InvalidArgument('feature store has no classes')

        self._classes = []
        dim = None
        for class_id, vectors in enumerate(classes):
            vectors = np.array(vectors, dtype=STORAGE_DTYPE)
            if vectors.ndim != 2 or vectors.shape[0] == 0:
                raise InvalidArgument(
                    'class {} has no instances'.format(class_id))
            if dim is None:
                dim = vectors.shape[1]
            if vectors.shape[1] != dim or dim == 0:
                raise InvalidArgument(
                    'class {} has dimension {}, expected {}'.format(
                        class_id, vectors.shape[1], dim))
            if not np.all(np.isfinite(vectors)):
                raise InvalidArgument(
                    'class {} contains NaN or Inf'.format(class_id))
            vectors.setflags(write=False)
            self._classes.append(vectors)

        #: feature dimensionality
        self.dim = dim
        #: class id to name, possibly empty
        self.class_names = dict(class_names or {})
        for class_id in self.class_names:
            if not 0 <= class_id < len(self._classes):
                raise InvalidArgument(
                    'name given for unknown class {}'.format(class_id))

    @property
    def num_classes(self):
        '''Number of classes'''
        return len(self._classes)

    def __len__(self):
        return sum(vectors.shape[0] for vectors in self._classes)

    def __repr__(self):
        return '<{} classes={} dim={} instances={}>'.format(
            type(self).__name__, self.num_classes, self.dim, len(self))

    def class_size(self, class_id):
        '''Number of instances of *class_id*'''
        return self._classes[class_id].shape[0]

    def raw(self, class_id):
        '''Read-only storage array of *class_id*'''
        return self._classes[class_id]

    def features(self, class_id, indices=None):
        '''64-bit copy of the vectors of *class_id* (optionally a subset)'''
        vectors = self._classes[class_id]
        if indices is not None:
            vectors = vectors[np.asarray(indices, dtype=np.intp)]
        return vectors.astype(np.float64)

    def to_arrays(self):
        '''All instances as ``(labels, vectors)``, ordered by class'''
        labels = np.concatenate([np.full(vectors.shape[0], class_id,
                dtype=np.uint32)
            for class_id, vectors in enumerate(self._classes)])
        return labels, np.concatenate(self._classes)

    @classmethod
    def from_arrays(cls, labels, vectors, *, class_names=None):
        '''Group *vectors* by *labels*, keeping their relative order'''
        labels = np.asarray(labels)
        vectors = np.asarray(vectors)
        ids = np.unique(labels)
        if ids.size == 0:
            raise InvalidArgument('feature store has no instances')
        if ids[0] != 0 or ids[-1] != ids.size - 1:
            raise InvalidArgument(
                'class ids must be dense from 0, got {}'.format(ids.tolist()))
        return cls([vectors[labels == class_id] for class_id in ids],
            class_names=class_names)


class SynthSpec:
    '''Gaussian mixture parameters for :py:func:`generate_synthetic`'''
    # pylint: disable=too-many-arguments
    def __init__(self, num_classes, dim, per_class, separation, noise,
            seed=0):
        for name, value in (('num_classes', num_classes), ('dim', dim),
                ('per_class', per_class)):
            if value < 1:
                raise InvalidArgument('{} must be >= 1, got {}'.format(
                    name, value))
        if not noise > 0:
            raise InvalidArgument('noise must be > 0, got {}'.format(noise))
        if separation < 0:
            raise InvalidArgument(
                'separation must be >= 0, got {}'.format(separation))
        self.num_classes = num_classes
        self.dim = dim
        self.per_class = per_class
        self.separation = separation
        self.noise = noise
        self.seed = seed


def generate_synthetic(spec):
    '''Draw a store of isotropic Gaussian clusters.

    Class centres lie uniformly on the sphere of radius ``spec.separation``;
    every instance is its centre plus Gaussian noise of scale ``spec.noise``.
    '''
    rng = np.random.default_rng(spec.seed)
    centers = rng.standard_normal((spec.num_classes, spec.dim))
    centers *= spec.separation / np.linalg.norm(centers, axis=1,
        keepdims=True)
    return FeatureStore([
        center + spec.noise * rng.standard_normal((spec.per_class, spec.dim))
        for center in centers])


def _guess_format(path, fmt):
    if fmt is not None:
        if fmt not in ('icif', 'csv'):
            raise InvalidArgument('unknown store format {!r}'.format(fmt))
        return fmt
    return 'csv' if pathlib.Path(path).suffix.lower() == '.csv' else 'icif'


def load_store(path, fmt=None):
    '''Load a feature store.

    Args:
        path: file to read
        fmt (str): ``'icif'`` or ``'csv'``; guessed from the suffix if None

    Raises:
        ici.exc.StoreFormatError: for malformed content
    '''
    path = pathlib.Path(path)
    if _guess_format(path, fmt) == 'csv':
        store = _load_csv(path)
    else:
        store = _load_icif(path)
    log.info('loaded %s from %s', store, path)
    return store


def save_store(store, path, fmt=None):
    '''Write *store* to *path*; loading it back restores every bit'''
    path = pathlib.Path(path)
    if not isinstance(store, FeatureStore):
        raise InvalidArgument('expected a FeatureStore')
    if _guess_format(path, fmt) == 'csv':
        _save_csv(store, path)
    else:
        _save_icif(store, path)


def _save_icif(store, path):
    labels, vectors = store.to_arrays()
    records = np.empty(labels.size, dtype=_record_dtype(store.dim))
    records['label'] = labels
    records['features'] = vectors
    with path.open('wb') as stream:
        stream.write(_HEADER.pack(ICIF_MAGIC, ICIF_VERSION, labels.size,
            store.dim))
        stream.write(records.tobytes())
        stream.write(_U32.pack(len(store.class_names)))
        for class_id in sorted(store.class_names):
            name = store.class_names[class_id].encode('utf-8')
            stream.write(_NAME_ENTRY.pack(class_id, len(name)))
            stream.write(name)


def _load_icif(path):
    # pylint: disable=too-many-locals
    data = path.read_bytes()
    if len(data) < _HEADER.size:
        raise StoreFormatError(path, 'byte 0',
            'truncated header: expected {} bytes, got {}'.format(
                _HEADER.size, len(data)))
    magic, version, count, dim = _HEADER.unpack_from(data)
    if magic != ICIF_MAGIC:
        raise StoreFormatError(path, 'byte 0',
            'bad magic {!r}, expected {!r}'.format(magic, ICIF_MAGIC))
    if version != ICIF_VERSION:
        raise StoreFormatError(path, 'byte 4',
            'unsupported version {}'.format(version))
    if count == 0 or dim == 0:
        raise StoreFormatError(path, 'byte 8',
            'empty store: {} instances of dimension {}'.format(count, dim))

    offset = _HEADER.size
    available = len(data) - offset
    if 4 + 4 * dim > available:
        raise StoreFormatError(path, 'byte 16',
            'truncated records: dimension {} does not fit in {} bytes of '
            'payload'.format(dim, available))
    rec = _record_dtype(dim)
    expected = count * rec.itemsize
    if available < expected:
        raise StoreFormatError(path, 'byte {}'.format(offset),
            'truncated records: expected {} bytes of payload, got {}'.format(
                expected, available))
    records = np.frombuffer(data, dtype=rec, count=count, offset=offset)
    finite = np.isfinite(records['features'])
    if not np.all(finite):
        row, col = np.argwhere(~finite)[0]
        raise StoreFormatError(path,
            'byte {}'.format(offset + row * rec.itemsize + 4 + col * 4),
            'non-finite value in record {}'.format(row))
    offset += expected

    names = {}
    if len(data) - offset < _U32.size:
        raise StoreFormatError(path, 'byte {}'.format(offset),
            'truncated name table')
    num_names, = _U32.unpack_from(data, offset)
    offset += _U32.size
    for _ in range(num_names):
        if len(data) - offset < _NAME_ENTRY.size:
            raise StoreFormatError(path, 'byte {}'.format(offset),
                'truncated name table entry')
        class_id, length = _NAME_ENTRY.unpack_from(data, offset)
        offset += _NAME_ENTRY.size
        if len(data) - offset < length:
            raise StoreFormatError(path, 'byte {}'.format(offset),
                'truncated class name: expected {} bytes, got {}'.format(
                    length, len(data) - offset))
        try:
            names[class_id] = data[offset:offset+length].decode('utf-8')
        except UnicodeDecodeError as err:
            raise StoreFormatError(path, 'byte {}'.format(offset),
                'class name is not UTF-8: {}'.format(err)) from err
        offset += length
    if offset != len(data):
        raise StoreFormatError(path, 'byte {}'.format(offset),
            '{} trailing bytes'.format(len(data) - offset))

    try:
        return FeatureStore.from_arrays(records['label'],
            records['features'], class_names=names)
    except InvalidArgument as err:
        raise StoreFormatError(path, 'byte {}'.format(_HEADER.size),
            str(err)) from err


def _save_csv(store, path):
    if store.class_names:
        log.warning('CSV has no room for class names, dropping them')
    labels, vectors = store.to_arrays()
    with path.open('w', newline='') as stream:
        writer = csv.writer(stream, lineterminator='\n')
        writer.writerow(['label'] + ['f{}'.format(i)
            for i in range(store.dim)])
        for label, vector in zip(labels, vectors):
            writer.writerow([int(label)]
                + ['{:.9g}'.format(float(value)) for value in vector])


def _load_csv(path):
    with path.open(newline='') as stream:
        reader = csv.reader(stream)
        header = next(reader, None)
        if not header:
            raise StoreFormatError(path, 'line 1', 'missing header')
        dim = len(header) - 1
        expected = ['label'] + ['f{}'.format(i) for i in range(dim)]
        if dim < 1 or [field.strip() for field in header] != expected:
            raise StoreFormatError(path, 'line 1',
                'header must be label,f0,...,f{d-1}')

        labels, vectors = [], []
        for row in reader:
            position = 'line {}'.format(reader.line_num)
            if not row:
                continue
            if len(row) != dim + 1:
                raise StoreFormatError(path, position,
                    'expected {} fields, got {}'.format(dim + 1, len(row)))
            try:
                label = int(row[0])
                vector = [float(field) for field in row[1:]]
            except ValueError as err:
                raise StoreFormatError(path, position, str(err)) from err
            if label < 0:
                raise StoreFormatError(path, position,
                    'negative label {}'.format(label))
            if not all(math.isfinite(value) for value in vector):
                raise StoreFormatError(path, position, 'non-finite value')
            labels.append(label)
            vectors.append(vector)

    if not labels:
        raise StoreFormatError(path, 'line 2', 'no instances')
    try:
        return FeatureStore.from_arrays(np.array(labels),
            np.array(vectors, dtype=STORAGE_DTYPE))
    except InvalidArgument as err:
        raise StoreFormatError(path, 'line 2', str(err)) from err
