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
#

class ICIError(Exception):
    ''' Base class for all errors raised by this package '''

class InvalidArgument(ICIError, ValueError):
    '''
    Raised when the input violates a precondition of the called operation,
    e.g. mismatched dimensions or a reduced dimension that is too large.
    '''

class StoreFormatError(ICIError):
    ''' Feature store file could not be parsed, abort loading '''
    def __init__(self, filepath, position, msg):
        super().__init__(
            '{}:{}: {}'.format(filepath or '<unknown>', position, msg))
        self.filepath = filepath
        self.position = position

class EpisodeSamplingError(InvalidArgument):
    ''' The feature store cannot provide the requested episode '''
    def __init__(self, msg, *, class_id=None):
        if class_id is not None:
            msg = 'class {}: {}'.format(class_id, msg)
        super().__init__(msg)
        self.class_id = class_id

class ConfigConflict(InvalidArgument):
    ''' Two run options cannot be used together '''
    def __init__(self, first, second, reason=None):
        msg = '{} conflicts with {}'.format(first, second)
        if reason:
            msg += ': ' + reason
        super().__init__(msg)
